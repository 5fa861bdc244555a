#pragma once

// Trajectory ensembles over a small worker pool. Each trajectory draws from
// its own counter-based streams, and results are stored by index, so the
// reduction order and output do not depend on the number of workers.

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace opo::runner {

/// 0 means one worker per hardware thread.
unsigned resolve_workers(unsigned requested);

/// Calls body(i) for i in [0, n) on up to `workers` threads. If any call
/// throws, remaining indices are skipped and the exception from the lowest
/// failing index is rethrown once all workers have stopped.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

template <class Result, class Fn>
std::vector<Result> run_ensemble(std::size_t trajectories, unsigned workers, Fn&& fn)
{
    std::vector<std::optional<Result>> slots(trajectories);
    parallel_for(trajectories, workers, [&](std::size_t i) { slots[i].emplace(fn(i)); });
    std::vector<Result> out;
    out.reserve(trajectories);
    for (auto& s : slots) {
        out.push_back(std::move(*s));
    }
    return out;
}

} // namespace opo::runner
