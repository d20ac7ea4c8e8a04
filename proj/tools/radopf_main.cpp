// Command line front end: validate/check/certify/solve/modify/gap-study
// plus program dumps and bundled test cases.
//
// Exit codes: 0 success, 1 validation or parse error, 2 solve failure,
// 3 I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "radopf/cases.hpp"
#include "radopf/conditions.hpp"
#include "radopf/dual.hpp"
#include "radopf/experiment.hpp"
#include "radopf/formulation.hpp"
#include "radopf/network.hpp"
#include "radopf/solver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSolve = 2;
constexpr int kExitIo = 3;

struct CliError {
  int code;
  std::string message;
};

radopf::Network load_net(const std::string& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) {
    throw CliError{kExitIo, "no such file or directory: " + path};
  }
  return radopf::load_network_file(path);
}

radopf::ObjectiveSpec parse_objective(const std::string& text) {
  if (text == "loss") return radopf::ObjectiveSpec::loss();
  const std::string prefix = "linear:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string path = text.substr(prefix.size());
    std::ifstream in(path);
    if (!in) throw CliError{kExitIo, "cannot open objective file: " + path};
    std::string body((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return radopf::ObjectiveSpec::from_json_string(body);
  }
  throw CliError{kExitValidation,
                 "objective must be 'loss' or 'linear:<file>', got: " + text};
}

void write_output(const std::string& out_path, const std::string& body) {
  if (out_path.empty() || out_path == "-") {
    std::cout << body;
    if (!body.empty() && body.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw CliError{kExitIo, "cannot write: " + out_path};
  out << body;
}

int default_jobs() {
  if (const char* env = std::getenv("RADOPF_JOBS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

nlohmann::json solution_json(const radopf::Solution& sol) {
  return {{"status", radopf::to_string(sol.status)},
          {"primal_obj", sol.primal_obj},
          {"dual_obj", sol.dual_obj},
          {"iterations", sol.iterations},
          {"residual_primal", sol.residuals.primal},
          {"residual_dual", sol.residuals.dual},
          {"residual_gap", sol.residuals.gap}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial network OPF conic relaxation toolkit"};
  app.require_subcommand(1);

  std::string net_path, out_path, objective_text = "loss";

  auto* validate = app.add_subcommand("validate", "Parse and validate a network file");
  validate->add_option("net", net_path, "network JSON file or csv-pair directory")->required();

  auto* check = app.add_subcommand("check", "Report the closed-form conditions C1-C3");
  check->add_option("net", net_path)->required();
  check->add_option("-o,--output", out_path, "write JSON here instead of stdout");

  auto* certify = app.add_subcommand("certify", "Construct a strict-feasibility certificate");
  certify->add_option("net", net_path)->required();
  certify->add_option("-o,--output", out_path);

  auto* solve_cmd = app.add_subcommand("solve", "Solve the relaxed OPF (optionally its dual too)");
  solve_cmd->add_option("net", net_path)->required();
  solve_cmd->add_option("--objective", objective_text, "loss | linear:<file>");
  bool with_dual = false;
  solve_cmd->add_flag("--dual", with_dual, "also build and solve the explicit dual");
  solve_cmd->add_option("-o,--output", out_path);

  auto* modify = app.add_subcommand("modify", "Minimally modify a network to satisfy a condition");
  modify->add_option("net", net_path)->required();
  std::string condition_text;
  modify->add_option("--condition", condition_text, "c1 | c2 | c3")->required();
  std::string modify_out;
  modify->add_option("-o,--output", modify_out, "modified network JSON")->required();

  auto* study = app.add_subcommand("gap-study", "Primal/dual gap statistics over random DG instances");
  study->add_option("net", net_path)->required();
  int instances = 100;
  study->add_option("--instances", instances, "instance count")->required();
  std::uint64_t seed = 1;
  study->add_option("--seed", seed);
  double threshold = 1e-4;
  study->add_option("--threshold", threshold, "strong-duality gap threshold");
  std::string study_modify;
  study->add_option("--modify", study_modify, "apply c1|c2|c3 modification first");
  std::string format_text = "table";
  study->add_option("--format", format_text, "csv | json | table");
  int jobs = default_jobs();
  study->add_option("--jobs", jobs, "worker threads (default $RADOPF_JOBS or 1)");
  double dg_p_max = 0.05, dg_q_max = 0.05;
  study->add_option("--dg-p-max", dg_p_max, "upper end of uniform active DG draw, p.u.");
  study->add_option("--dg-q-max", dg_q_max, "upper end of uniform reactive DG draw, p.u.");
  std::string dg_mode_text = "dispatchable";
  study->add_option("--dg-mode", dg_mode_text, "dispatchable | fixed");
  study->add_option("--objective", objective_text, "loss | linear:<file>");
  study->add_option("-o,--output", out_path);

  auto* dump = app.add_subcommand("dump", "Dump a conic program as JSON (external solver bridge)");
  dump->add_option("net", net_path)->required();
  std::string program_kind = "cr";
  dump->add_option("--program", program_kind, "cr | socp1 | socp2");
  bool dump_dual = false;
  dump->add_flag("--dual", dump_dual, "dump the explicit dual instead");
  dump->add_option("--objective", objective_text);
  dump->add_option("-o,--output", out_path);

  auto* make_case = app.add_subcommand("make-case", "Write a bundled test network");
  std::string case_name;
  make_case->add_option("--case", case_name, "ieee33 | synth56")->required();
  std::uint64_t case_seed = 56;
  make_case->add_option("--seed", case_seed, "seed for synthetic cases");
  make_case->add_option("-o,--output", out_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const radopf::Network net = load_net(net_path);
      std::cout << "valid: " << net.node_count() << " nodes + root, "
                << net.branch_count() << " branches, v0 = " << net.v0()
                << "\n";
      return kExitOk;
    }

    if (*check) {
      const radopf::Network net = load_net(net_path);
      write_output(out_path,
                   radopf::check_conditions(net).to_json_string(net));
      return kExitOk;
    }

    if (*certify) {
      const radopf::Network net = load_net(net_path);
      const radopf::CertifyResult res = radopf::certify_strong_duality(net);
      write_output(out_path, res.to_json_string(net));
      return kExitOk;
    }

    if (*solve_cmd) {
      const radopf::Network net = load_net(net_path);
      const radopf::ObjectiveSpec obj = parse_objective(objective_text);
      const radopf::ConicProgram primal = radopf::build_opf_cr(net, obj);
      const radopf::Solution ps = radopf::solve(primal);

      nlohmann::json out{{"primal", solution_json(ps)}};
      bool ok = ps.status == radopf::SolveStatus::optimal;
      if (with_dual) {
        const radopf::DualProgram dual = radopf::build_dual(primal);
        const radopf::Solution ds = radopf::solve(dual.program);
        out["dual"] = solution_json(ds);
        ok = ok && ds.status == radopf::SolveStatus::optimal;
        if (ok) {
          const double dval = dual.dual_objective_value(ds.primal_obj);
          const radopf::GapResult gap =
              radopf::duality_gap(ps.primal_obj, dval);
          out["gap"] = {{"dual_value", dval},
                        {"absolute", gap.absolute},
                        {"relative", gap.relative}};
        }
      }
      write_output(out_path, out.dump(2));
      return ok ? kExitOk : kExitSolve;
    }

    if (*modify) {
      const radopf::Network net = load_net(net_path);
      radopf::Condition cond;
      if (condition_text == "c1") {
        cond = radopf::Condition::c1;
      } else if (condition_text == "c2") {
        cond = radopf::Condition::c2;
      } else if (condition_text == "c3") {
        cond = radopf::Condition::c3;
      } else {
        throw CliError{kExitValidation,
                       "--condition must be c1, c2, or c3"};
      }
      const radopf::ModifiedNetwork mod = radopf::modify_network(net, cond);
      write_output(modify_out, mod.net.to_json_string());
      nlohmann::json log = nlohmann::json::array();
      for (const auto& entry : mod.log) {
        log.push_back({{"element", entry.element},
                       {"field", entry.field},
                       {"old", entry.old_value},
                       {"new", entry.new_value}});
      }
      std::cout << log.dump(2) << "\n";
      return kExitOk;
    }

    if (*study) {
      radopf::Network net = load_net(net_path);
      if (!study_modify.empty()) {
        radopf::Condition cond;
        if (study_modify == "c1") {
          cond = radopf::Condition::c1;
        } else if (study_modify == "c2") {
          cond = radopf::Condition::c2;
        } else if (study_modify == "c3") {
          cond = radopf::Condition::c3;
        } else {
          throw CliError{kExitValidation, "--modify must be c1, c2, or c3"};
        }
        net = radopf::modify_network(net, cond).net;
      }
      radopf::InstanceSpec spec;
      spec.dg_p_range = {0.0, dg_p_max};
      spec.dg_q_range = {0.0, dg_q_max};
      spec.seed = seed;
      spec.count = instances;
      if (dg_mode_text == "dispatchable") {
        spec.mode = radopf::DgMode::dispatchable;
      } else if (dg_mode_text == "fixed") {
        spec.mode = radopf::DgMode::fixed_injection;
      } else {
        throw CliError{kExitValidation, "--dg-mode must be dispatchable or fixed"};
      }
      const radopf::ObjectiveSpec obj = parse_objective(objective_text);
      const auto nets = radopf::generate_instances(net, spec);
      const radopf::GapStudyResult result =
          radopf::run_gap_study(nets, obj, threshold, jobs);

      radopf::ReportFormat fmt;
      if (format_text == "csv") {
        fmt = radopf::ReportFormat::csv;
      } else if (format_text == "json") {
        fmt = radopf::ReportFormat::json;
      } else if (format_text == "table") {
        fmt = radopf::ReportFormat::table;
      } else {
        throw CliError{kExitValidation, "--format must be csv, json, or table"};
      }
      write_output(out_path, radopf::emit_report(result, fmt));
      return result.failed_count == 0 ? kExitOk : kExitSolve;
    }

    if (*dump) {
      const radopf::Network net = load_net(net_path);
      const radopf::ObjectiveSpec obj = parse_objective(objective_text);
      radopf::ConicProgram program;
      if (program_kind == "cr") {
        program = radopf::build_opf_cr(net, obj);
      } else if (program_kind == "socp1") {
        program = radopf::build_opf_socp1(net, obj);
      } else if (program_kind == "socp2") {
        program = radopf::build_opf_socp2(net, obj);
      } else {
        throw CliError{kExitValidation, "--program must be cr, socp1, or socp2"};
      }
      if (dump_dual) {
        write_output(out_path, radopf::build_dual(program).to_json_string(2));
      } else {
        write_output(out_path, program.to_json_string(2));
      }
      return kExitOk;
    }

    if (*make_case) {
      radopf::Network net = case_name == "ieee33"
                                ? radopf::ieee33_network()
                                : case_name == "synth56"
                                      ? radopf::synthetic56_network(case_seed)
                                      : throw CliError{kExitValidation,
                                                       "--case must be ieee33 "
                                                       "or synth56"};
      write_output(out_path, net.to_json_string());
      return kExitOk;
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const radopf::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const radopf::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
