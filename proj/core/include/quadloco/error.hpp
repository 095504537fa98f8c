#pragma once

#include <stdexcept>
#include <string>

namespace quadloco {

/// Pipeline stage that raised an error. The CLI maps each stage to an exit code.
enum class Stage {
  kConfig,
  kTerrain,
  kBodyPlan,
  kFootstep,
  kQp,
  kDynamics,
  kSimulation,
};

const char* to_string(Stage stage);

class Error : public std::runtime_error {
 public:
  Error(Stage stage, const std::string& what) : std::runtime_error(what), stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

}  // namespace quadloco
