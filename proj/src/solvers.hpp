#pragma once

#include "xtalk/scheduler.hpp"

namespace xtalk::detail {

Schedule solve_internal(const OptimizationProblem& problem, const SolveOptions& options);
Schedule solve_smtlib(const OptimizationProblem& problem, const SolveOptions& options);

/// Start times of series_schedule for an already-built model.
std::vector<TimeNs> serial_starts(const ScheduleModel& model);

}  // namespace xtalk::detail
