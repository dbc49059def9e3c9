#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::vector<const char*> argv{"teamdiag"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = teamdiag::cli::run_cli(static_cast<int>(argv.size()), argv.data(),
                                    out, err);
  return {code, out.str(), err.str()};
}

std::string data_path(const std::string& name) {
  return std::string(TEAMDIAG_DATA_DIR) + "/" + name;
}

fs::path temp_dir() {
  fs::path dir = fs::temp_directory_path() / "teamdiag_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string write_temp(const std::string& name, const std::string& content) {
  fs::path p = temp_dir() / name;
  std::ofstream(p, std::ios::trunc) << content;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("validate: goal-achieving plan exits 0 with findings") {
  CliResult r = run({"validate", data_path("p1_plan.json")});
  CHECK(r.code == 0);
  CHECK(r.out.find("postcondition-minimal: true") != std::string::npos);
  CHECK(r.out.find("task t1: est = {{Start}}, clob = {(Start, t2)}") !=
        std::string::npos);
}

TEST_CASE("validate: unestablishable goal exits 1 naming the rule") {
  std::string p = write_temp("p1_no_t1.json", R"({
    "propositions": ["c", "s"],
    "agents": ["a2"],
    "tasks": {
      "Start": {"pre": [], "post": ["!c", "!s"]},
      "t2": {"pre": [], "post": ["s"], "agent": "a2"},
      "Finish": {"pre": ["c", "s"], "post": []}
    },
    "order": []
  })");
  CliResult r = run({"validate", p});
  CHECK(r.code == 1);
  CHECK(r.err.find("nestablishable literal c for Finish") != std::string::npos);
}

TEST_CASE("validate: malformed and empty files exit 2") {
  CHECK(run({"validate", write_temp("broken.json", "{ not json")}).code == 2);
  CHECK(run({"validate", write_temp("empty.json", "")}).code == 2);
  CHECK(run({"validate", "/nonexistent/nowhere.json"}).code == 2);
}

TEST_CASE("translate: writes byte-stable model and binding files") {
  std::string out = (temp_dir() / "p1_model.json").string();
  CliResult r1 = run({"translate", data_path("p1_plan.json"), "-o", out});
  CHECK(r1.code == 0);
  CHECK(r1.out.find("endogenous variables: 9") != std::string::npos);
  CHECK(r1.out.find("conjunctive: true") != std::string::npos);
  std::string model1 = slurp(out);
  std::string binding1 = slurp((temp_dir() / "p1_model.binding.json").string());
  CHECK(binding1.find("\"intentions\"") != std::string::npos);

  CliResult r2 = run({"translate", data_path("p1_plan.json"), "-o", out});
  CHECK(r2.code == 0);
  CHECK(slurp(out) == model1);
  CHECK(slurp((temp_dir() / "p1_model.binding.json").string()) == binding1);

  nlohmann::json model = nlohmann::json::parse(model1);
  CHECK(model["endogenous"].size() == 9);
}

TEST_CASE("translate: non-goal-achieving plan exits 1") {
  std::string p = write_temp("hopeless.json", R"({
    "propositions": ["g"], "agents": [],
    "tasks": {"Start": {"pre": [], "post": []},
              "Finish": {"pre": ["g"], "post": []}},
    "order": []
  })");
  CliResult r = run({"translate", p, "-o", (temp_dir() / "x.json").string()});
  CHECK(r.code == 1);
}

TEST_CASE("diagnose: P1 text report") {
  CliResult r = run({"diagnose", data_path("p1_plan.json"), "--obs",
                     data_path("p1_observation.json")});
  CHECK(r.code == 0);
  CHECK(r.out.find("algorithm: conjunctive") != std::string::npos);
  CHECK(r.out.find("cause: {intd(a2,t2)=0}") != std::string::npos);
  CHECK(r.out.find("a2: max responsibility 1 (1.000000), blame 1 (1.000000)") !=
        std::string::npos);
  CHECK(r.out.find("oracle") == std::string::npos);  // not requested
}

TEST_CASE("diagnose: --oracle cross-checks and reports agreement") {
  CliResult r = run({"diagnose", data_path("p1_plan.json"), "--obs",
                     data_path("p1_observation.json"), "--oracle"});
  CHECK(r.code == 0);
  CHECK(r.out.find("oracle: agree") != std::string::npos);
}

TEST_CASE("diagnose: json and text renderings carry the same numbers") {
  CliResult text = run({"diagnose", data_path("p2_plan.json"), "--obs",
                        data_path("p2_observation.json"), "--prior",
                        data_path("p2_prior_half.json")});
  CliResult json = run({"diagnose", data_path("p2_plan.json"), "--obs",
                        data_path("p2_observation.json"), "--prior",
                        data_path("p2_prior_half.json"), "--format", "json"});
  CHECK(text.code == 0);
  CHECK(json.code == 0);
  nlohmann::json j = nlohmann::json::parse(json.out);
  CHECK(j["agents"]["a1"]["blame"]["num"] == "1");
  CHECK(j["agents"]["a1"]["blame"]["den"] == "6");
  CHECK(j["agents"]["a1"]["blame"]["decimal"] == "0.166667");
  CHECK(j["agents"]["a1"]["max_responsibility"]["num"] == "1");
  CHECK(j["agents"]["a1"]["max_responsibility"]["den"] == "3");
  CHECK(text.out.find("a1: max responsibility 1/3 (0.333333), blame 1/6 "
                      "(0.166667)") != std::string::npos);
  // the JSON report round-trips through its own schema
  CHECK(nlohmann::json::parse(j.dump()) == j);
  CHECK(j["contexts"].size() == 2);
  CHECK(j["algorithm"] == "conjunctive");
}

TEST_CASE("diagnose: thread count does not change the report") {
  auto strip_timings = [](std::string s) {
    return s.substr(0, s.find("timings:"));
  };
  CliResult one = run({"diagnose", data_path("p2_plan.json"), "--obs",
                       data_path("p2_observation.json")});
  CliResult four = run({"diagnose", data_path("p2_plan.json"), "--obs",
                        data_path("p2_observation.json"), "--threads", "4"});
  CHECK(one.code == 0);
  CHECK(four.code == 0);
  CHECK(strip_timings(one.out) == strip_timings(four.out));
}

TEST_CASE("diagnose: --candidates all adds a debug cause view") {
  CliResult r = run({"diagnose", data_path("p1_plan.json"), "--obs",
                     data_path("p1_observation.json"), "--candidates", "all"});
  CHECK(r.code == 0);
  CHECK(r.out.find("cause over all variables:") != std::string::npos);
  CHECK(r.out.find("{perf(t2)=0}") != std::string::npos);
  // scores unchanged: still intention-based
  CHECK(r.out.find("a2: max responsibility 1 (1.000000)") != std::string::npos);
}

TEST_CASE("diagnose: inconsistent observation exits 4") {
  std::string obs = write_temp("bad_obs.json",
                               R"({"performed": {"t1": 1}, "intended": {"t1": 0}})");
  CliResult r = run({"diagnose", data_path("p1_plan.json"), "--obs", obs});
  CHECK(r.code == 4);
  CHECK(r.err.find("InconsistentObservation") != std::string::npos);
}

TEST_CASE("diagnose: starved budget exits 3") {
  CliResult r = run({"diagnose", data_path("p2_plan.json"), "--obs",
                     data_path("p2_observation.json"), "--oracle", "--budget",
                     "1"});
  CHECK(r.code == 3);
}

TEST_CASE("cause: enumerate, check, and find on a raw model") {
  std::vector<std::string> base = {"cause",
                                   "--model", data_path("fin_model.json"),
                                   "--context", data_path("fin_context_01.json"),
                                   "--event", R"(["not",["var","Fin"]])",
                                   "--candidates", "T1,T2"};
  CliResult enumerate = run(base);
  CHECK(enumerate.code == 0);
  CHECK(enumerate.out.find("causes: 1") != std::string::npos);
  CHECK(enumerate.out.find("{T1=0}") != std::string::npos);

  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = base;
    for (auto& e : extra) args.push_back(e);
    return run(args);
  };
  CliResult check_good = with({"--check", R"({"T1": 0})"});
  CHECK(check_good.code == 0);
  CHECK(check_good.out.find("is_cause: true") != std::string::npos);
  CliResult check_oracle = with({"--check", R"({"T1": 0})", "--engine", "oracle"});
  CHECK(check_oracle.out.find("is_cause: true") != std::string::npos);
  CliResult check_bad = with({"--check", R"({"T2": 1})"});
  CHECK(check_bad.out.find("is_cause: false") != std::string::npos);

  CliResult find = with({"--find"});
  CHECK(find.code == 0);
  CHECK(find.out.find("cause: {T1=0}") != std::string::npos);
}

TEST_CASE("responsibility subcommand") {
  CliResult r = run({"responsibility",
                     "--model", data_path("fin_model.json"),
                     "--context", data_path("fin_context_01.json"),
                     "--event", R"(["not",["var","Fin"]])",
                     "--candidates", "T1,T2", "--var", "T1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("responsibility(T1=0): 1 (1.000000)") != std::string::npos);
}

TEST_CASE("blame subcommand over a worlds file") {
  // dr(T1=0) is 1 in (0,1) and 1/2 in (0,0); equal weights give 3/4
  CliResult r = run({"blame",
                     "--model", data_path("fin_model.json"),
                     "--event", R"(["not",["var","Fin"]])",
                     "--candidates", "T1,T2",
                     "--var", "T1", "--value", "0",
                     "--worlds", data_path("fin_worlds.json")});
  CHECK(r.code == 0);
  CHECK(r.out.find("blame(T1=0): 3/4 (0.750000)") != std::string::npos);
}

TEST_CASE("gen: seeded generation is reproducible and valid") {
  CliResult a = run({"gen", "--seed", "11", "--min-tasks", "3", "--max-tasks", "6"});
  CliResult b = run({"gen", "--seed", "11", "--min-tasks", "3", "--max-tasks", "6"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  std::string path = write_temp("generated.json", a.out);
  CHECK(run({"validate", path}).code == 0);
  CliResult other = run({"gen", "--seed", "12", "--min-tasks", "3",
                         "--max-tasks", "6"});
  CHECK(other.out != a.out);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({"diagnose"}).code == 2);
  CHECK(run({"no-such-command"}).code == 2);
}
