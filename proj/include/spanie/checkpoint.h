// Model checkpoints: magic, version, a JSON header (configuration,
// vocabularies, tensor index) and raw little-endian float64 tensor data.
// Layout is documented in docs/FORMATS.md.

#ifndef SPANIE_CHECKPOINT_H_
#define SPANIE_CHECKPOINT_H_

#include <cstdint>
#include <iosfwd>
#include <string>

#include "spanie/model.h"

namespace spanie {

inline constexpr char kCheckpointMagic[8] = {'S', 'P', 'A', 'N', 'I', 'E',
                                             'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void WriteCheckpoint(std::ostream &out, const Model &model);
Model ReadCheckpoint(std::istream &in);

void SaveCheckpoint(const std::string &path, const Model &model);
Model LoadCheckpoint(const std::string &path);

}  // namespace spanie

#endif  // SPANIE_CHECKPOINT_H_
