#include "mtl/task.hpp"

#include <stdexcept>

namespace mtl {

void TaskSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("task name must be non-empty");
  if (levels < 2)
    throw std::invalid_argument("task '" + name + "': levels must be >= 2, got " +
                                std::to_string(levels));
}

const char* to_string(TaskKind kind) {
  return kind == TaskKind::nominal ? "nominal" : "ordinal";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "nominal") return TaskKind::nominal;
  if (s == "ordinal") return TaskKind::ordinal;
  throw std::invalid_argument("unknown task kind '" + s + "' (expected nominal or ordinal)");
}

}  // namespace mtl
