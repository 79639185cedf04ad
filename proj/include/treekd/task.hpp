#pragma once

#include <string>

namespace treekd {

enum class TaskKind { Classification, Regression };

inline std::string to_string(TaskKind task) {
  return task == TaskKind::Classification ? "classification" : "regression";
}

}  // namespace treekd
