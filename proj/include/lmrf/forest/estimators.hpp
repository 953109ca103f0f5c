#pragma once

#include <array>
#include <span>

#include "lmrf/cohort.hpp"
#include "lmrf/step_function.hpp"

namespace lmrf::forest {

inline constexpr int kCauses = 3;

/// Product-limit survival over all causes (status > 0 is an event). Knots at
/// distinct event times.
StepFunction kaplan_meier(std::span<const TimeToEvent> sample);

/// Nelson-Aalen cumulative hazard. `cause` = 0 counts every nonzero status as
/// an event; otherwise only that cause.
StepFunction nelson_aalen(std::span<const TimeToEvent> sample, int cause = 0);

struct CumulativeIncidence {
  std::array<StepFunction, kCauses> cif;  // causes 1..3
  StepFunction survival;                  // event-free survival, all causes
};

/// Aalen-Johansen: CIF_k(t) = sum over event times t_j <= t of
/// S(t_j-) * d_kj / Y_j, with S the all-cause Kaplan-Meier curve.
CumulativeIncidence aalen_johansen(std::span<const TimeToEvent> sample);

}  // namespace lmrf::forest
