#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "sutrack/tensor.hpp"

namespace sutrack {

/// Axis-aligned box in pixel coordinates, corners (x0, y0) and (x1, y1).
/// Pixel (row i, col j) covers [j, j+1) × [i, i+1).
struct Box {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    double cx() const { return 0.5 * (x0 + x1); }
    double cy() const { return 0.5 * (y0 + y1); }

    static Box from_center(double cx, double cy, double w, double h) {
        return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
    }
    bool operator==(const Box&) const = default;
};

enum class Task : std::uint8_t { RGB = 0, RGBD = 1, RGBT = 2, RGBE = 3, RGBL = 4 };
inline constexpr std::size_t kNumTasks = 5;
inline constexpr std::array<Task, kNumTasks> kAllTasks{Task::RGB, Task::RGBD, Task::RGBT, Task::RGBE, Task::RGBL};

std::string_view task_name(Task task);
Task parse_task(std::string_view name);
inline std::size_t task_index(Task task) { return static_cast<std::size_t>(task); }
/// Tasks that carry an image-form auxiliary modality (depth/thermal/event).
inline bool task_has_aux(Task task) { return task == Task::RGBD || task == Task::RGBT || task == Task::RGBE; }

/// One image of a sequence: RGB plus the optional auxiliary image and
/// language description. Images are H×W×3 with values in [0, 1].
struct ModalFrame {
    Tensor rgb;
    std::optional<Tensor> aux;
    std::optional<std::string> language;
    Task task = Task::RGB;

    std::size_t height() const { return rgb.dim(0); }
    std::size_t width() const { return rgb.dim(1); }

    /// Throws std::invalid_argument if the frame breaks its invariants
    /// (shapes, task/aux/language consistency, divisibility by `patch` if nonzero).
    void validate(std::size_t patch = 0) const;
};

}  // namespace sutrack
