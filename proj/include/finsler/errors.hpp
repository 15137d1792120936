#pragma once

#include <stdexcept>
#include <string>

namespace finsler {

struct NonFiniteInput : std::runtime_error { using std::runtime_error::runtime_error; };
struct ConeViolation : std::runtime_error { using std::runtime_error::runtime_error; };
struct DegenerateTensor : std::runtime_error { using std::runtime_error::runtime_error; };
struct WindTooStrong : std::runtime_error { using std::runtime_error::runtime_error; };
struct SingularTensor : std::runtime_error { using std::runtime_error::runtime_error; };
struct StepFailure : std::runtime_error { using std::runtime_error::runtime_error; };
struct NoConvergence : std::runtime_error { using std::runtime_error::runtime_error; };
struct RankDeficient : std::runtime_error { using std::runtime_error::runtime_error; };
struct NotReached : std::runtime_error { using std::runtime_error::runtime_error; };
struct WindowDegenerate : std::runtime_error { using std::runtime_error::runtime_error; };
struct DimensionDrop : std::runtime_error { using std::runtime_error::runtime_error; };
struct UsageError : std::runtime_error { using std::runtime_error::runtime_error; };

}  // namespace finsler
