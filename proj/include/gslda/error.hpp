#pragma once

#include <stdexcept>
#include <string>

namespace gslda {

// Raised for precondition violations and degenerate inputs. The message is the
// stable, user-facing reason (e.g. "degenerate class distribution").
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Raised by rank_one_augment when the Schur complement of the candidate
// vanishes. Callers ranking candidates catch this and skip the candidate.
class SingularAugmentation : public Error {
 public:
  SingularAugmentation() : Error("singular augmentation") {}
};

}  // namespace gslda
