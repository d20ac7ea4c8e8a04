#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "radopf/cases.hpp"
#include "radopf/conditions.hpp"
#include "radopf/experiment.hpp"

using namespace radopf;
using namespace radopf::testing;

TEST_CASE("modify_network") {
  SUBCASE("a compliant network is returned unchanged") {
    const Network net =
        make_chain({{0.02, 0.02}, {0.01, 0.01}});  // wide boxes, equal ratios
    for (Condition c : {Condition::c1, Condition::c2, Condition::c3}) {
      const ModifiedNetwork mod = modify_network(net, c);
      CHECK(mod.log.empty());
      CHECK(mod.net.to_json_string() == net.to_json_string());
    }
  }

  SUBCASE("pure load gains a strictly positive top under c1") {
    NodeLimits lm = wide_limits();
    lm.p_min = lm.p_max = -0.3;
    lm.q_min = -0.05;
    lm.q_max = 0.0;
    const Network net = make_chain({{0.01, 0.02}}, lm);
    const ModifiedNetwork mod = modify_network(net, Condition::c1);
    CHECK(mod.net.limits(1).p_min == -0.3);
    CHECK(mod.net.limits(1).p_max == doctest::Approx(1e-3));
    CHECK(mod.net.limits(1).q_max == doctest::Approx(1e-3));
    CHECK_FALSE(mod.log.empty());
    CHECK(check_c1(mod.net).c1);
  }

  SUBCASE("c2 rescales x to equalize a violating child ratio") {
    // ratios: parent branch 0.6, child branch 1.0 -> child x scaled by
    // 1.0/0.6 so the ratios match.
    const Network net = make_chain({{0.012, 0.02}, {0.02, 0.02}});
    const ModifiedNetwork mod = modify_network(net, Condition::c2);
    const Branch& child = mod.net.branch_of(2);
    CHECK(child.x == doctest::Approx(0.02 * (1.0 / 0.6)));
    CHECK(child.r == 0.02);  // r preserved
    const auto rep = check_c2(mod.net);
    CHECK(rep.c2);
    bool logged_x = false;
    for (const auto& entry : mod.log) logged_x |= entry.field == "x";
    CHECK(logged_x);
  }

  SUBCASE("each condition's output passes its checker on random networks") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Network net = random_radial_network(seed, 3 + int(seed) % 20);
      CHECK(check_c1(modify_network(net, Condition::c1).net).c1);
      CHECK(check_c2(modify_network(net, Condition::c2).net).c2);
      CHECK(check_c3(modify_network(net, Condition::c3).net).c3);
    }
  }
}

TEST_CASE("generate_instances") {
  const Network base = modify_network(ieee33_network(), Condition::c1).net;

  SUBCASE("count zero gives an empty list") {
    InstanceSpec spec;
    spec.count = 0;
    CHECK(generate_instances(base, spec).empty());
  }

  SUBCASE("same seed reproduces identical instances") {
    InstanceSpec spec;
    spec.count = 3;
    spec.seed = 42;
    const auto a = generate_instances(base, spec);
    const auto b = generate_instances(base, spec);
    REQUIRE(a.size() == 3);
    for (size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].to_json_string() == b[k].to_json_string());
    }
  }

  SUBCASE("dispatchable draws preserve the modified condition") {
    InstanceSpec spec;
    spec.count = 50;
    spec.seed = 7;
    for (const Network& net : generate_instances(base, spec)) {
      CHECK(check_c1(net).c1);
    }
  }

  SUBCASE("fixed-injection draws shift both bounds") {
    InstanceSpec spec;
    spec.count = 1;
    spec.seed = 9;
    spec.mode = DgMode::fixed_injection;
    spec.dg_p_range = {0.02, 0.02};  // deterministic shift
    spec.dg_q_range = {0.0, 0.0};
    const auto nets = generate_instances(base, spec);
    REQUIRE(nets.size() == 1);
    CHECK(nets[0].limits(1).p_min ==
          doctest::Approx(base.limits(1).p_min + 0.02));
    CHECK(nets[0].limits(1).p_max ==
          doctest::Approx(base.limits(1).p_max + 0.02));
  }
}

TEST_CASE("gap study bookkeeping and reports") {
  const Network base = modify_network(
      make_chain({{0.01, 0.02}, {0.02, 0.03}}), Condition::c1).net;
  InstanceSpec spec;
  spec.count = 8;
  spec.seed = 5;
  const auto nets = generate_instances(base, spec);
  const GapStudyResult result =
      run_gap_study(nets, ObjectiveSpec::loss(), 1e-4, 2);

  SUBCASE("accounting identity") {
    int strong = 0, weak = 0;
    for (const auto& r : result.instances) {
      if (!r.usable) continue;
      (r.strong_duality ? strong : weak) += 1;
    }
    CHECK(strong == result.n_strong);
    CHECK(result.solved_count + result.failed_count ==
          static_cast<int>(result.instances.size()));
    CHECK(strong + weak == result.solved_count);
  }

  SUBCASE("parallel and serial runs emit identical CSV") {
    const GapStudyResult serial =
        run_gap_study(nets, ObjectiveSpec::loss(), 1e-4, 1);
    CHECK(emit_report(serial, ReportFormat::csv) ==
          emit_report(result, ReportFormat::csv));
  }

  SUBCASE("csv carries rows plus a summary block") {
    const std::string csv = emit_report(result, ReportFormat::csv);
    CHECK(csv.find("instance_id,status_primal") == 0);
    CHECK(csv.find("# avg_gap,") != std::string::npos);
    CHECK(csv.find("# r_strong,") != std::string::npos);
    std::istringstream lines(csv);
    std::string line;
    int data_rows = 0;
    while (std::getline(lines, line)) {
      if (!line.empty() && line[0] != '#' && line.find("instance_id") != 0) {
        ++data_rows;
      }
    }
    CHECK(data_rows == 8);
  }

  SUBCASE("empty result emits a header-only CSV") {
    GapStudyResult empty;
    const std::string csv = emit_report(empty, ReportFormat::csv);
    CHECK(csv ==
          "instance_id,status_primal,status_dual,primal_obj,dual_obj,"
          "abs_gap,rel_gap,strong_duality\n");
  }

  SUBCASE("json round-trip reproduces aggregates exactly") {
    const std::string j = emit_report(result, ReportFormat::json);
    const GapStudyResult back = gap_study_from_json(j);
    CHECK(back.threshold == result.threshold);
    CHECK(back.solved_count == result.solved_count);
    CHECK(back.failed_count == result.failed_count);
    CHECK(back.avg_gap == result.avg_gap);
    CHECK(back.max_gap == result.max_gap);
    CHECK(back.n_strong == result.n_strong);
    CHECK(back.r_strong == result.r_strong);
    REQUIRE(back.instances.size() == result.instances.size());
    for (size_t k = 0; k < back.instances.size(); ++k) {
      CHECK(back.instances[k].rel_gap == result.instances[k].rel_gap);
    }
  }

  SUBCASE("table format prints the ratio as a one-decimal percentage") {
    const std::string table = emit_report(result, ReportFormat::table);
    CHECK(table.find("R_SD") != std::string::npos);
    CHECK(table.find("%") != std::string::npos);
    if (result.n_strong == result.solved_count && result.solved_count > 0) {
      CHECK(table.find("100.0%") != std::string::npos);
    }
  }
}
