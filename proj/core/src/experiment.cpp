#include "radopf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace radopf {

namespace {

double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string fmt(double v, const char* spec = "%.10e") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

ModifiedNetwork modify_network(const Network& net, Condition condition,
                               double eps_g) {
  const int n = net.node_count();
  std::vector<ModLogEntry> log;

  std::vector<NodeLimits> limits(n);
  for (int i = 1; i <= n; ++i) limits[i - 1] = net.limits(i);

  auto apply = [&](int i, const char* field, double& slot, double value) {
    if (value != slot) {
      log.push_back({"node " + net.label(i), field, slot, value});
      slot = value;
    }
  };

  for (int i = 1; i <= n; ++i) {
    NodeLimits& lm = limits[i - 1];
    switch (condition) {
      case Condition::c1:
        apply(i, "p_min", lm.p_min, std::min(lm.p_min, 0.0));
        apply(i, "p_max", lm.p_max, std::max(lm.p_max, eps_g));
        apply(i, "q_min", lm.q_min, std::min(lm.q_min, 0.0));
        apply(i, "q_max", lm.q_max, std::max(lm.q_max, eps_g));
        break;
      case Condition::c2:
        apply(i, "p_min", lm.p_min, std::min(lm.p_min, -eps_g));
        apply(i, "p_max", lm.p_max, std::max(lm.p_max, 0.0));
        apply(i, "q_min", lm.q_min, std::min(lm.q_min, 0.0));
        apply(i, "q_max", lm.q_max, std::max(lm.q_max, 0.0));
        break;
      case Condition::c3:
        apply(i, "p_min", lm.p_min, std::min(lm.p_min, 0.0));
        apply(i, "p_max", lm.p_max, std::max(lm.p_max, 0.0));
        apply(i, "q_min", lm.q_min, std::min(lm.q_min, -eps_g));
        apply(i, "q_max", lm.q_max, std::max(lm.q_max, 0.0));
        break;
    }
  }

  std::vector<Branch> branches = net.branches();
  if (condition == Condition::c2 || condition == Condition::c3) {
    // Walk parents before children (ids ascend with depth) so every
    // parent ratio is final when its child branches are adjusted. The
    // smallest multiplicative x change equalizes the child ratio to the
    // parent's.
    for (int k = 1; k <= n; ++k) {
      const NodeId parent = branches[k - 1].parent;
      if (parent == 0) continue;
      const Branch& upper = branches[parent - 1];
      Branch& lower = branches[k - 1];
      const double upper_ratio = upper.r / upper.x;
      const double lower_ratio = lower.r / lower.x;
      const bool violated = condition == Condition::c2
                                ? lower_ratio > upper_ratio
                                : lower_ratio < upper_ratio;
      if (violated) {
        double new_x = lower.x * lower_ratio / upper_ratio;
        // The division can land one ulp on the wrong side; nudge until the
        // equalized ratio satisfies the comparison exactly.
        if (condition == Condition::c2) {
          while (lower.r / new_x > upper_ratio) {
            new_x = std::nextafter(new_x,
                                   std::numeric_limits<double>::infinity());
          }
        } else {
          while (lower.r / new_x < upper_ratio) {
            new_x = std::nextafter(new_x, 0.0);
          }
        }
        log.push_back({"branch " + net.label(k) + "->" + net.label(parent),
                       "x", lower.x, new_x});
        lower.x = new_x;
      }
    }
  }

  ModifiedNetwork out{net.with_limits(limits).with_branches(branches),
                      std::move(log)};
  return out;
}

std::vector<Network> generate_instances(const Network& base,
                                        const InstanceSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const int n = base.node_count();
  std::vector<Network> instances;
  instances.reserve(std::max(spec.count, 0));

  for (int k = 0; k < spec.count; ++k) {
    std::vector<NodeLimits> limits(n);
    for (int i = 1; i <= n; ++i) limits[i - 1] = base.limits(i);
    for (int i = 0; i < n; ++i) {
      const double gp = spec.dg_p_range.first +
                        (spec.dg_p_range.second - spec.dg_p_range.first) *
                            u01(rng);
      const double gq = spec.dg_q_range.first +
                        (spec.dg_q_range.second - spec.dg_q_range.first) *
                            u01(rng);
      if (spec.mode == DgMode::dispatchable) {
        limits[i].p_max += gp;
        limits[i].q_max += gq;
      } else {
        limits[i].p_min += gp;
        limits[i].p_max += gp;
        limits[i].q_min += gq;
        limits[i].q_max += gq;
      }
    }
    instances.push_back(base.with_limits(limits));
  }
  return instances;
}

bool usable_solve(const Solution& sol) {
  if (sol.status == SolveStatus::optimal) return true;
  return sol.status == SolveStatus::max_iters &&
         sol.residuals.primal <= 1e-6 && sol.residuals.x_in_cone;
}

GapStudyResult run_gap_study(const std::vector<Network>& instances,
                             const ObjectiveSpec& obj, double threshold,
                             int parallelism) {
  GapStudyResult result;
  result.threshold = threshold;
  result.instances.resize(instances.size());

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t k = next.fetch_add(1); k < instances.size();
         k = next.fetch_add(1)) {
      InstanceResult& r = result.instances[k];
      r.instance_id = static_cast<int>(k);

      const ConicProgram primal = build_opf_cr(instances[k], obj);
      const DualProgram dual = build_dual(primal);

      SolveOptions opts;
      const Solution ps = solve(primal, opts);
      const Solution ds = solve(dual.program, opts);

      r.status_primal = ps.status;
      r.status_dual = ds.status;
      r.usable = usable_solve(ps) && usable_solve(ds);
      if (r.usable) {
        r.primal_obj = ps.primal_obj;
        r.dual_obj = dual.dual_objective_value(ds.primal_obj);
        const GapResult gap = duality_gap(r.primal_obj, r.dual_obj);
        r.abs_gap = gap.absolute;
        r.rel_gap = gap.relative;
        r.strong_duality = r.rel_gap < threshold;
      }
    }
  };

  const int jobs =
      std::max(1, std::min<int>(parallelism,
                                static_cast<int>(instances.size() ? instances.size() : 1)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  double sum = 0.0;
  double best_max = -std::numeric_limits<double>::infinity();
  for (const InstanceResult& r : result.instances) {
    if (!r.usable) {
      ++result.failed_count;
      continue;
    }
    ++result.solved_count;
    sum += r.rel_gap;
    best_max = std::max(best_max, r.rel_gap);
    if (r.strong_duality) ++result.n_strong;
  }
  if (result.solved_count > 0) {
    result.avg_gap = sum / result.solved_count;
    result.max_gap = best_max;
    result.r_strong =
        static_cast<double>(result.n_strong) / result.solved_count;
  }
  return result;
}

std::string emit_report(const GapStudyResult& result, ReportFormat format) {
  using nlohmann::json;

  if (format == ReportFormat::csv) {
    std::ostringstream out;
    out << "instance_id,status_primal,status_dual,primal_obj,dual_obj,"
           "abs_gap,rel_gap,strong_duality\n";
    for (const InstanceResult& r : result.instances) {
      out << r.instance_id << ',' << to_string(r.status_primal) << ','
          << to_string(r.status_dual) << ',' << fmt(r.primal_obj) << ','
          << fmt(r.dual_obj) << ',' << fmt(r.abs_gap) << ',' << fmt(r.rel_gap)
          << ',' << (r.strong_duality ? "true" : "false") << '\n';
    }
    if (!result.instances.empty()) {
      out << "# threshold," << fmt(result.threshold, "%.3e") << '\n';
      out << "# solved," << result.solved_count << '\n';
      out << "# failed," << result.failed_count << '\n';
      out << "# avg_gap," << fmt(result.avg_gap) << '\n';
      out << "# max_gap," << fmt(result.max_gap) << '\n';
      out << "# n_strong," << result.n_strong << '\n';
      out << "# r_strong," << fmt(result.r_strong * 100.0, "%.1f") << "%\n";
    }
    return out.str();
  }

  if (format == ReportFormat::json) {
    json rows = json::array();
    for (const InstanceResult& r : result.instances) {
      rows.push_back({{"instance_id", r.instance_id},
                      {"status_primal", to_string(r.status_primal)},
                      {"status_dual", to_string(r.status_dual)},
                      {"primal_obj", r.primal_obj},
                      {"dual_obj", r.dual_obj},
                      {"abs_gap", r.abs_gap},
                      {"rel_gap", r.rel_gap},
                      {"usable", r.usable},
                      {"strong_duality", r.strong_duality}});
    }
    json j{{"threshold", result.threshold},
           {"instances", rows},
           {"solved", result.solved_count},
           {"failed", result.failed_count},
           {"avg_gap", result.avg_gap},
           {"max_gap", result.max_gap},
           {"n_strong", result.n_strong},
           {"r_strong", result.r_strong}};
    return j.dump(2);
  }

  // Table format, with the summary columns of the study protocol.
  std::ostringstream out;
  out << "instances: " << result.instances.size()
      << "  solved: " << result.solved_count
      << "  failed: " << result.failed_count
      << "  threshold: " << fmt(result.threshold, "%.0e") << "\n\n";
  out << "  Avg-G        G+           N_SD   R_SD\n";
  char line[160];
  std::snprintf(line, sizeof(line), "  %-12.4e %-12.4e %-6d %.1f%%\n",
                result.avg_gap, result.max_gap, result.n_strong,
                result.r_strong * 100.0);
  out << line;
  return out.str();
}

GapStudyResult gap_study_from_json(const std::string& text) {
  using nlohmann::json;
  const json j = json::parse(text);
  GapStudyResult result;
  result.threshold = j.at("threshold").get<double>();
  result.solved_count = j.at("solved").get<int>();
  result.failed_count = j.at("failed").get<int>();
  result.avg_gap = j.at("avg_gap").is_number()
                       ? j.at("avg_gap").get<double>()
                       : std::numeric_limits<double>::quiet_NaN();
  result.max_gap = j.at("max_gap").is_number()
                       ? j.at("max_gap").get<double>()
                       : std::numeric_limits<double>::quiet_NaN();
  result.n_strong = j.at("n_strong").get<int>();
  result.r_strong = j.at("r_strong").is_number()
                        ? j.at("r_strong").get<double>()
                        : std::numeric_limits<double>::quiet_NaN();

  auto status_from = [](const std::string& s) {
    if (s == "optimal") return SolveStatus::optimal;
    if (s == "primal_infeasible") return SolveStatus::primal_infeasible;
    if (s == "dual_infeasible") return SolveStatus::dual_infeasible;
    if (s == "max_iters") return SolveStatus::max_iters;
    return SolveStatus::numerical_failure;
  };
  for (const json& row : j.at("instances")) {
    InstanceResult r;
    r.instance_id = row.at("instance_id").get<int>();
    r.status_primal = status_from(row.at("status_primal").get<std::string>());
    r.status_dual = status_from(row.at("status_dual").get<std::string>());
    auto num = [&](const char* key) {
      return row.at(key).is_number()
                 ? row.at(key).get<double>()
                 : std::numeric_limits<double>::quiet_NaN();
    };
    r.primal_obj = num("primal_obj");
    r.dual_obj = num("dual_obj");
    r.abs_gap = num("abs_gap");
    r.rel_gap = num("rel_gap");
    r.usable = row.at("usable").get<bool>();
    r.strong_duality = row.at("strong_duality").get<bool>();
    result.instances.push_back(r);
  }
  return result;
}

}  // namespace radopf
