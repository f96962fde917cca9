#include "sutrack/types.hpp"

#include <stdexcept>

namespace sutrack {

std::string_view task_name(Task task) {
    switch (task) {
        case Task::RGB: return "RGB";
        case Task::RGBD: return "RGBD";
        case Task::RGBT: return "RGBT";
        case Task::RGBE: return "RGBE";
        case Task::RGBL: return "RGBL";
    }
    throw std::invalid_argument("invalid task value");
}

Task parse_task(std::string_view name) {
    for (auto t : kAllTasks) {
        if (task_name(t) == name) return t;
    }
    throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

void ModalFrame::validate(std::size_t patch) const {
    if (!rgb.defined() || rgb.rank() != 3 || rgb.dim(2) != 3) {
        throw std::invalid_argument("rgb image must be H×W×3");
    }
    if (aux) {
        if (aux->shape() != rgb.shape()) {
            throw std::invalid_argument("aux image shape " + shape_str(aux->shape()) + " differs from rgb " +
                                        shape_str(rgb.shape()));
        }
    }
    if (task_has_aux(task) && !aux) {
        throw std::invalid_argument(std::string(task_name(task)) + " frame without auxiliary image");
    }
    if (task == Task::RGBL && !language) throw std::invalid_argument("RGBL frame without language description");
    if (patch != 0 && (height() % patch != 0 || width() % patch != 0)) {
        throw std::invalid_argument("frame " + std::to_string(height()) + "x" + std::to_string(width()) +
                                    " not divisible by patch size " + std::to_string(patch));
    }
}

}  // namespace sutrack
