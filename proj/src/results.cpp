#include "sutrack/results.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

namespace sutrack {

void write_results(const std::filesystem::path& path, const std::vector<ResultLine>& lines) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[256];
    for (const auto& l : lines) {
        std::snprintf(buf, sizeof buf, "%zu %.17g %.17g %.17g %.17g %.17g\n", l.frame, l.box.x0, l.box.y0, l.box.x1,
                      l.box.y1, l.confidence);
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<ResultLine> read_results(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results file " + path.string());
    std::vector<ResultLine> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        ResultLine r;
        std::string extra;
        if (!(ss >> r.frame >> r.box.x0 >> r.box.y0 >> r.box.x1 >> r.box.y1 >> r.confidence) || (ss >> extra))
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": expected 'frame_idx x0 y0 x1 y1 confidence'");
        if (r.frame != out.size())
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected frame index " +
                                     std::to_string(out.size()) + ", got " + std::to_string(r.frame));
        out.push_back(r);
    }
    return out;
}

std::size_t thread_count() {
    if (const char* env = std::getenv("SUTRACK_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace sutrack
