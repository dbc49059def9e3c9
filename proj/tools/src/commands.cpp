#include "commands.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <memory>
#include <sstream>

#include "report.hpp"
#include "teamdiag/diagnose.hpp"
#include "teamdiag/error.hpp"
#include "teamdiag/generate.hpp"

namespace teamdiag::cli {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::ParseError, "cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::ParseError, "cannot write file '" + path + "'");
  out << content;
}

long ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

Formula parse_event_arg(const std::string& arg) {
  if (arg.empty())
    raise(ErrorCode::InvalidArgument, "--event is required");
  if (arg[0] == '[') return Formula::from_json(arg);
  return Formula::from_json(read_file(arg));
}

hp::CandidateSet resolve_candidates(const CausalModel& model,
                                    const QueryArgs& args) {
  if (!args.binding_path.empty()) {
    nlohmann::json j = nlohmann::json::parse(read_file(args.binding_path),
                                             nullptr, false);
    if (j.is_discarded() || !j.contains("intentions"))
      raise(ErrorCode::ParseError,
            "binding file '" + args.binding_path + "' has no intentions list");
    std::vector<std::string> names;
    for (const auto& n : j["intentions"]) names.push_back(n.get<std::string>());
    return hp::CandidateSet::of(std::move(names));
  }
  if (args.candidates.empty() || args.candidates == "all")
    return hp::CandidateSet::all_endogenous(model);
  std::vector<std::string> names;
  std::string current;
  for (char c : args.candidates) {
    if (c == ',') {
      if (!current.empty()) names.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) names.push_back(current);
  return hp::CandidateSet::of(std::move(names));
}

// Splits a caused event into (polarity, monotone core) when possible:
// !phi with phi monotone is a negative query on phi, a monotone event is a
// positive query on itself.
std::optional<std::pair<monotone::Polarity, Formula>> monotone_view(
    const Formula& event) {
  if (event.kind() == Formula::Kind::Not && event.args()[0].is_monotone())
    return std::make_pair(monotone::Polarity::Negative, event.args()[0]);
  if (event.is_monotone())
    return std::make_pair(monotone::Polarity::Positive, event);
  return std::nullopt;
}

std::string binding_sidecar_path(const std::string& out_path) {
  const std::string suffix = ".json";
  if (out_path.size() > suffix.size() &&
      out_path.compare(out_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return out_path.substr(0, out_path.size() - suffix.size()) + ".binding.json";
  return out_path + ".binding.json";
}

}  // namespace

int cmd_validate(const std::string& plan_path, std::ostream& out) {
  plan::PlanFile pf = plan::parse_plan(read_file(plan_path));
  std::vector<plan::EstablishingSet> analysis = plan::analyze_all(pf.plan, pf.domain);

  bool postmin = true;
  for (const plan::EstablishingSet& est : analysis) {
    out << "task " << est.task << ": est = {";
    for (size_t i = 0; i < est.sets.size(); ++i) {
      out << (i ? ", {" : "{");
      for (size_t k = 0; k < est.sets[i].size(); ++k)
        out << (k ? ", " : "") << est.sets[i][k];
      out << "}";
    }
    out << "}, clob = {";
    for (size_t i = 0; i < est.clob_pairs.size(); ++i)
      out << (i ? ", (" : "(") << est.clob_pairs[i].first << ", "
          << est.clob_pairs[i].second << ")";
    out << "}\n";
    if (est.sets.size() != 1) postmin = false;
  }
  out << "goal-achieving: true\n";
  out << "postcondition-minimal: " << (postmin ? "true" : "false") << "\n";
  return 0;
}

int cmd_translate(const std::string& plan_path, const std::string& out_path,
                  std::ostream& out) {
  plan::PlanFile pf = plan::parse_plan(read_file(plan_path));
  plan::PlanModelBinding binding = plan::compile(pf);
  write_file(out_path, serialize_model(*binding.model) + "\n");
  const std::string sidecar = binding_sidecar_path(out_path);
  write_file(sidecar, plan::serialize_binding(binding) + "\n");
  out << "endogenous variables: " << binding.model->endogenous().size() << "\n";
  out << "exogenous variables: " << binding.model->exogenous().size() << "\n";
  out << "conjunctive: " << (binding.model->conjunctive() ? "true" : "false")
      << "\n";
  out << "wrote " << out_path << " and " << sidecar << "\n";
  return 0;
}

int cmd_diagnose(const DiagnoseArgs& args, std::ostream& out) {
  auto t0 = std::chrono::steady_clock::now();
  plan::PlanFile pf = plan::parse_plan(read_file(args.plan_path));
  plan::PlanModelBinding binding = plan::compile(pf);
  long compile_ms = ms_since(t0);

  diag::Observation obs = diag::parse_observation(read_file(args.obs_path));
  diag::IntentionPrior prior;
  if (!args.prior_path.empty())
    prior = diag::parse_prior(read_file(args.prior_path));

  diag::DiagnoseOptions opt;
  opt.cross_check = args.oracle;
  opt.threads = args.threads;
  if (args.budget != 0) {
    opt.search.max_nodes = args.budget;
    opt.oracle.max_steps = args.budget;
  }

  auto t1 = std::chrono::steady_clock::now();
  diag::DiagnosisResult result = diag::diagnose(binding, obs, prior, opt);
  long diagnose_ms = ms_since(t1);

  ReportInputs inputs;
  inputs.binding = &binding;
  inputs.result = &result;
  inputs.compile_ms = compile_ms;
  inputs.diagnose_ms = diagnose_ms;

  if (args.candidates == "all") {
    // debug view: causes over every endogenous variable (never scored)
    inputs.show_debug_causes = true;
    for (const diag::ContextDiagnosis& cd : result.contexts) {
      hp::Engine engine(*binding.model, cd.context, binding.failure_event,
                        hp::CandidateSet::all_endogenous(*binding.model),
                        opt.oracle);
      inputs.debug_causes.push_back(engine.enumerate_causes());
    }
  } else if (args.candidates != "intentions") {
    raise(ErrorCode::InvalidArgument,
          "--candidates must be 'intentions' or 'all'");
  }

  if (args.format == "json") {
    out << report_json(inputs).dump(2) << "\n";
  } else if (args.format == "text") {
    report_text(out, inputs);
  } else {
    raise(ErrorCode::InvalidArgument, "--format must be 'text' or 'json'");
  }
  return 0;
}

int cmd_cause(const QueryArgs& args, std::ostream& out) {
  CausalModel model = parse_model(read_file(args.model_path));
  Context ctx = parse_context(model, read_file(args.context_path));
  Formula event = parse_event_arg(args.event);
  hp::CandidateSet cands = resolve_candidates(model, args);

  hp::SearchOptions oracle_opt;
  monotone::SearchOptions search_opt;
  if (args.budget != 0) {
    oracle_opt.max_steps = args.budget;
    search_opt.max_nodes = args.budget;
  }

  auto view = monotone_view(event);
  const bool can_monotone = model.monotone() && view.has_value();
  if (args.engine == "monotone" && !can_monotone)
    raise(ErrorCode::NotMonotone,
          "the monotone engine needs a monotone model and a monotone event "
          "(or its negation)");

  if (args.find) {
    if (!can_monotone)
      raise(ErrorCode::NotMonotone, "--find requires the monotone engine");
    monotone::Query query{&model, view->second, view->first, cands};
    monotone::FindResult res = monotone::find_cause(query, ctx);
    if (args.format == "json") {
      out << hp::to_json({res.cause, res.witness}) << "\n";
    } else {
      out << "cause: " << res.cause.to_text() << "\n";
      out << "evaluations: " << res.evaluations << "\n";
    }
    return 0;
  }

  if (!args.check_cause.empty()) {
    nlohmann::json cj = nlohmann::json::parse(args.check_cause, nullptr, false);
    if (cj.is_discarded() || !cj.is_object())
      raise(ErrorCode::ParseError, "--check takes a JSON object {var: 0|1}");
    hp::Cause cause;
    for (const auto& [name, v] : cj.items()) cause.conjuncts[name] = v.get<int>() == 1;
    bool verdict;
    if (args.engine != "oracle" && can_monotone) {
      monotone::Query query{&model, view->second, view->first, cands};
      verdict = monotone::check_cause(query, ctx, cause).is_cause;
    } else {
      verdict = hp::is_actual_cause(model, ctx, cause, event, cands, oracle_opt)
                    .has_value();
    }
    out << "is_cause: " << (verdict ? "true" : "false") << "\n";
    return 0;
  }

  std::vector<hp::CauseWithWitness> causes =
      hp::enumerate_causes(model, ctx, event, cands, oracle_opt);
  if (args.format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const hp::CauseWithWitness& cw : causes)
      arr.push_back(nlohmann::json::parse(hp::to_json(cw)));
    out << arr.dump(2) << "\n";
  } else {
    out << "causes: " << causes.size() << "\n";
    for (const hp::CauseWithWitness& cw : causes)
      out << "  " << cw.cause.to_text() << "\n";
  }
  return 0;
}

int cmd_responsibility(const QueryArgs& args, std::ostream& out) {
  CausalModel model = parse_model(read_file(args.model_path));
  Context ctx = parse_context(model, read_file(args.context_path));
  Formula event = parse_event_arg(args.event);
  hp::CandidateSet cands = resolve_candidates(model, args);
  if (args.var.empty()) raise(ErrorCode::InvalidArgument, "--var is required");

  hp::SearchOptions oracle_opt;
  monotone::SearchOptions search_opt;
  if (args.budget != 0) {
    oracle_opt.max_steps = args.budget;
    search_opt.max_nodes = args.budget;
  }

  bool value;
  if (args.value == -1) {
    value = evaluate(model, ctx).value(model.require_var(args.var));
  } else {
    value = args.value == 1;
  }

  auto view = monotone_view(event);
  Rational dr;
  std::string path_used = "oracle";
  if (args.engine != "oracle" && model.monotone() && view.has_value()) {
    // the monotone engines answer for the flip-origin value only
    bool origin = view->first == monotone::Polarity::Positive;
    if (value == origin) {
      monotone::Query query{&model, view->second, view->first, cands};
      dr = monotone::responsibility_exact(query, ctx, args.var, search_opt);
      path_used = "monotone";
    } else {
      dr = hp::degree_of_responsibility(model, ctx, args.var, value, event,
                                        cands, oracle_opt);
    }
  } else {
    dr = hp::degree_of_responsibility(model, ctx, args.var, value, event, cands,
                                      oracle_opt);
  }

  if (args.format == "json") {
    nlohmann::json j = {{"var", args.var},
                        {"value", value ? 1 : 0},
                        {"responsibility", rational_json(dr)},
                        {"algorithm", path_used}};
    out << j.dump(2) << "\n";
  } else {
    out << "responsibility(" << args.var << "=" << (value ? 1 : 0)
        << "): " << rational_text(dr) << "\n";
  }
  return 0;
}

int cmd_blame(const QueryArgs& args, std::ostream& out) {
  auto model = std::make_shared<const CausalModel>(
      parse_model(read_file(args.model_path)));
  Formula event = parse_event_arg(args.event);
  QueryArgs cand_args = args;
  hp::CandidateSet cands = resolve_candidates(*model, cand_args);
  if (args.var.empty()) raise(ErrorCode::InvalidArgument, "--var is required");
  if (args.value == -1)
    raise(ErrorCode::InvalidArgument, "--value is required for blame");

  hp::SearchOptions oracle_opt;
  if (args.budget != 0) oracle_opt.max_steps = args.budget;

  hp::EpistemicState state =
      hp::parse_epistemic_state(model, read_file(args.worlds_path));
  Rational blame = hp::degree_of_blame(state, args.var, args.value == 1, event,
                                       cands, oracle_opt);
  if (args.format == "json") {
    nlohmann::json j = {{"var", args.var},
                        {"value", args.value},
                        {"blame", rational_json(blame)}};
    out << j.dump(2) << "\n";
  } else {
    out << "blame(" << args.var << "=" << args.value
        << "): " << rational_text(blame) << "\n";
  }
  return 0;
}

int cmd_gen(const GenArgs& args, std::ostream& out) {
  gen::PlanSpec spec;
  spec.min_tasks = args.min_tasks;
  spec.max_tasks = args.max_tasks;
  spec.max_agents = args.agents;
  spec.postcondition_minimal = args.postmin;
  spec.clobber_permille = args.clobber_permille;
  if (spec.min_tasks == 0 || spec.min_tasks > spec.max_tasks)
    raise(ErrorCode::InvalidArgument, "need 1 <= min tasks <= max tasks");
  plan::PlanFile pf = gen::random_plan(args.seed, spec);
  std::string text = plan::serialize_plan(pf) + "\n";
  if (args.out_path.empty()) {
    out << text;
  } else {
    write_file(args.out_path, text);
    out << "wrote " << args.out_path << "\n";
  }
  return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"teamdiag: compile team plans into causal models and attribute "
               "plan failure to agents"};
  app.require_subcommand(1);

  std::string plan_path, out_path;
  auto* validate = app.add_subcommand(
      "validate", "check plan structure, goal achievement, and est/clob sets");
  validate->add_option("plan", plan_path, "plan JSON file")->required();

  auto* translate =
      app.add_subcommand("translate", "compile a plan into a causal model");
  translate->add_option("plan", plan_path, "plan JSON file")->required();
  translate->add_option("-o,--out", out_path, "model output path")->required();

  DiagnoseArgs dargs;
  auto* diagnose = app.add_subcommand(
      "diagnose", "infer contexts and attribute responsibility and blame");
  diagnose->add_option("plan", dargs.plan_path, "plan JSON file")->required();
  diagnose->add_option("--obs", dargs.obs_path, "observation JSON file")
      ->required();
  diagnose->add_option("--prior", dargs.prior_path, "intention prior JSON file");
  diagnose->add_option("--format", dargs.format, "text | json");
  diagnose->add_option("--candidates", dargs.candidates, "intentions | all");
  diagnose->add_option("--budget", dargs.budget, "search budget override");
  diagnose->add_flag("--oracle", dargs.oracle,
                     "cross-check the fast path against the exhaustive engine");
  diagnose->add_option("--threads", dargs.threads, "worker threads");

  QueryArgs qargs;
  auto* cause = app.add_subcommand(
      "cause", "find, check, or enumerate causes on a raw model");
  auto add_query_options = [&](CLI::App* cmd, bool with_context) {
    cmd->add_option("--model", qargs.model_path, "model JSON file")->required();
    if (with_context)
      cmd->add_option("--context", qargs.context_path, "context JSON file")
          ->required();
    cmd->add_option("--event", qargs.event,
                    "caused event: inline JSON formula or a file path")
        ->required();
    cmd->add_option("--candidates", qargs.candidates,
                    "'all' or comma-separated variable names");
    cmd->add_option("--binding", qargs.binding_path,
                    "binding sidecar; restricts candidates to its intentions");
    cmd->add_option("--engine", qargs.engine, "auto | oracle | monotone");
    cmd->add_option("--format", qargs.format, "text | json");
    cmd->add_option("--budget", qargs.budget, "search budget override");
  };
  add_query_options(cause, true);
  cause->add_option("--check", qargs.check_cause,
                    "verify this cause (JSON object {var: 0|1})");
  cause->add_flag("--find", qargs.find, "greedy minimal cause (monotone only)");

  auto* responsibility = app.add_subcommand(
      "responsibility", "degree of responsibility of one variable");
  add_query_options(responsibility, true);
  responsibility->add_option("--var", qargs.var, "variable name")->required();
  responsibility->add_option("--value", qargs.value, "0 or 1 (default: actual)");

  auto* blame =
      app.add_subcommand("blame", "expected responsibility over worlds");
  add_query_options(blame, false);
  blame->add_option("--var", qargs.var, "variable name")->required();
  blame->add_option("--value", qargs.value, "0 or 1")->required();
  blame->add_option("--worlds", qargs.worlds_path,
                    "worlds JSON: [{\"context\": {...}, \"prob\": ...}]")
      ->required();

  GenArgs gargs;
  auto* gen = app.add_subcommand("gen", "generate a random goal-achieving plan");
  gen->add_option("--seed", gargs.seed, "generator seed");
  gen->add_option("--min-tasks", gargs.min_tasks, "minimum middle tasks");
  gen->add_option("--max-tasks", gargs.max_tasks, "maximum middle tasks");
  gen->add_option("--agents", gargs.agents, "maximum agents");
  gen->add_flag("--postmin,!--no-postmin", gargs.postmin,
                "keep establishing sets unique (default on)");
  gen->add_option("--clobber-permille", gargs.clobber_permille,
                  "chance of clobbering tasks, per mille");
  gen->add_option("-o,--out", gargs.out_path, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::stringstream usage;
    int code = app.exit(e, usage, usage);
    (code == 0 ? out : err) << usage.str();
    return code == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(plan_path, out);
    if (translate->parsed()) return cmd_translate(plan_path, out_path, out);
    if (diagnose->parsed()) return cmd_diagnose(dargs, out);
    if (cause->parsed()) return cmd_cause(qargs, out);
    if (responsibility->parsed()) return cmd_responsibility(qargs, out);
    if (blame->parsed()) return cmd_blame(qargs, out);
    if (gen->parsed()) return cmd_gen(gargs, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::ParseError:
        return 2;
      case ErrorCode::SearchBudgetExceeded:
      case ErrorCode::EnumerationBudgetExceeded:
      case ErrorCode::PreconditionCapExceeded:
        return 3;
      case ErrorCode::InconsistentObservation:
        return 4;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace teamdiag::cli
