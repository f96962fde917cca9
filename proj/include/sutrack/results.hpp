#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "sutrack/types.hpp"

namespace sutrack {

struct ResultLine {
    std::size_t frame = 0;
    Box box;
    double confidence = 0;
};

/// One line per frame: "frame_idx x0 y0 x1 y1 confidence".
void write_results(const std::filesystem::path& path, const std::vector<ResultLine>& lines);
/// Throws with the line number on malformed input or non-consecutive frame indices.
std::vector<ResultLine> read_results(const std::filesystem::path& path);

/// SUTRACK_THREADS if set to a positive integer, else the hardware concurrency (at least 1).
std::size_t thread_count();

/// Calls fn(i) for i in [0, n) on up to `threads` workers. The first exception is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace sutrack
