#include "spanie/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "spanie/config_json.h"

namespace spanie {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint tensors are stored little-endian");

namespace {

template <typename T>
void WritePod(std::ostream &out, const T &value) {
  out.write(reinterpret_cast<const char *>(&value), sizeof(T));
}

template <typename T>
T ReadPod(std::istream &in) {
  T value{};
  in.read(reinterpret_cast<char *>(&value), sizeof(T));
  if (!in) throw Error("checkpoint truncated");
  return value;
}

std::vector<std::string> VocabEntries(const Vocabulary &v) {
  // Entry 0 is the reserved unknown token and is recreated on load.
  return {v.entries().begin() + 1, v.entries().end()};
}

}  // namespace

void WriteCheckpoint(std::ostream &out, const Model &model) {
  json header;
  header["format"] = "spanie-checkpoint";
  header["version"] = kCheckpointVersion;
  header["config"] = model.config();
  header["words"] = model.words();
  header["pos_vocab"] = VocabEntries(model.pos_vocab());
  header["dep_vocab"] = VocabEntries(model.dep_vocab());
  json tensors = json::array();
  model.params().ForEach([&tensors](const std::string &name, const Matrix &m) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  });
  header["tensors"] = std::move(tensors);
  const std::string text = header.dump();

  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  WritePod<std::uint32_t>(out, kCheckpointVersion);
  WritePod<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  model.params().ForEach([&out](const std::string &, const Matrix &m) {
    out.write(reinterpret_cast<const char *>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  });
  if (!out) throw Error("failed writing checkpoint");
}

Model ReadCheckpoint(std::istream &in) {
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error("not a checkpoint (bad magic)");
  }
  auto version = ReadPod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  auto length = ReadPod<std::uint64_t>(in);
  if (length > (1ULL << 34)) throw Error("checkpoint header too large");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw Error("checkpoint truncated");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception &e) {
    throw Error(std::string("corrupt checkpoint header: ") + e.what());
  }
  if (header.value("version", 0U) != kCheckpointVersion) {
    throw Error("checkpoint header version mismatch");
  }
  ModelConfig config = header.at("config").get<ModelConfig>();
  auto words = header.at("words").get<std::vector<std::string>>();
  Vocabulary pos(header.at("pos_vocab").get<std::vector<std::string>>());
  Vocabulary dep(header.at("dep_vocab").get<std::vector<std::string>>());

  Parameters params;
  params.lstm.resize(2 * static_cast<std::size_t>(config.layers));
  std::vector<std::pair<std::string, Matrix *>> slots;
  params.ForEach([&slots](const std::string &name, Matrix &m) {
    slots.emplace_back(name, &m);
  });
  const json &index = header.at("tensors");
  if (index.size() != slots.size()) {
    throw Error("checkpoint lists " + std::to_string(index.size()) +
                " tensors, expected " + std::to_string(slots.size()));
  }
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const json &entry = index[k];
    if (entry.at("name").get<std::string>() != slots[k].first) {
      throw Error("checkpoint tensor " + std::to_string(k) + " is '" +
                  entry.at("name").get<std::string>() + "', expected '" +
                  slots[k].first + "'");
    }
    Matrix &m = *slots[k].second;
    m.resize(entry.at("rows").get<Eigen::Index>(),
             entry.at("cols").get<Eigen::Index>());
    in.read(reinterpret_cast<char *>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw Error("checkpoint truncated in tensor " + slots[k].first);
  }
  return Model(config, std::move(words), std::move(pos), std::move(dep),
               std::move(params));
}

void SaveCheckpoint(const std::string &path, const Model &model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path);
  WriteCheckpoint(out, model);
}

Model LoadCheckpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  try {
    return ReadCheckpoint(in);
  } catch (const json::exception &e) {
    throw Error(path + ": corrupt checkpoint: " + e.what());
  } catch (const Error &e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace spanie
