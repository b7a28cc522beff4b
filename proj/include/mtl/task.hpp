#pragma once

#include <string>

namespace mtl {

enum class TaskKind { nominal, ordinal };

// One attribute estimation task. Nominal tasks classify into `levels`
// unordered classes (labels 0..levels-1); ordinal tasks estimate a rank in
// 1..levels via levels-1 binary "rank > k" subproblems.
struct TaskSpec {
  TaskKind kind = TaskKind::nominal;
  int levels = 2;  // classes C (nominal) or ranks K (ordinal)
  std::string name;

  int head_width() const { return kind == TaskKind::ordinal ? levels - 1 : levels; }

  void validate() const;  // throws std::invalid_argument
};

const char* to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

}  // namespace mtl
