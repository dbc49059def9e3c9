#pragma once

#include <cstdint>
#include <ostream>
#include <string>

namespace teamdiag::cli {

int cmd_validate(const std::string& plan_path, std::ostream& out);

int cmd_translate(const std::string& plan_path, const std::string& out_path,
                  std::ostream& out);

struct DiagnoseArgs {
  std::string plan_path;
  std::string obs_path;
  std::string prior_path;            // empty: default prior (intend w.p. 1)
  std::string format = "text";       // text | json
  std::string candidates = "intentions";  // intentions | all
  uint64_t budget = 0;               // 0: engine defaults
  bool oracle = false;
  unsigned threads = 1;
};
int cmd_diagnose(const DiagnoseArgs& args, std::ostream& out);

struct QueryArgs {
  std::string model_path;
  std::string context_path;
  std::string event;          // inline JSON (starts with '[') or a file path
  std::string candidates;     // "all", empty, or comma-separated names
  std::string binding_path;   // use the sidecar's intention list
  std::string engine = "auto";  // auto | oracle | monotone
  std::string format = "text";
  std::string check_cause;    // JSON object {var: 0|1}; empty: enumerate
  bool find = false;          // greedy monotone find_cause
  std::string var;            // responsibility/blame target
  int value = -1;             // -1: use the variable's actual value
  std::string worlds_path;    // blame only
  uint64_t budget = 0;
};
int cmd_cause(const QueryArgs& args, std::ostream& out);
int cmd_responsibility(const QueryArgs& args, std::ostream& out);
int cmd_blame(const QueryArgs& args, std::ostream& out);

struct GenArgs {
  uint64_t seed = 1;
  uint32_t min_tasks = 1;
  uint32_t max_tasks = 10;
  uint32_t agents = 3;
  bool postmin = true;
  uint32_t clobber_permille = 300;
  std::string out_path;  // empty: stdout
};
int cmd_gen(const GenArgs& args, std::ostream& out);

/// Full CLI entry: parses argv, dispatches, and maps errors to exit codes
/// (1 semantic, 2 parse, 3 budget, 4 inconsistent observation).
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace teamdiag::cli
