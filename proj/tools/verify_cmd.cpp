#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "bdr/verify.hpp"
#include "cli_common.hpp"

namespace bdr::cli {

namespace {

nlohmann::json report_json(const SuiteReport& report) {
  nlohmann::json j;
  j["suite"] = report.suite;
  j["instances"] = report.instances;
  j["tolerance"] = report.tolerance;
  j["passed"] = report.passed();
  j["failure_count"] = report.failures.size();
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : report.failures) {
    fails.push_back({{"seed", f.seed}, {"detail", f.detail}});
  }
  j["failures"] = fails;
  return j;
}

}  // namespace

int run_verify(const VerifyConfig& cfg) {
  SuiteReport report;
  const double tol = cfg.tol;
  const int n = cfg.instances;
  if (cfg.suite == "duality") {
    report = run_duality_suite(n > 0 ? n : 500, tol > 0 ? tol : 1e-6, cfg.seed);
  } else if (cfg.suite == "support") {
    report = run_support_suite(n > 0 ? n : 500, tol > 0 ? tol : 1e-7, cfg.seed);
  } else if (cfg.suite == "ordering") {
    report = run_ordering_suite(n > 0 ? n : 1000, {0.25, 0.5, 0.75}, cfg.seed);
  } else if (cfg.suite == "phi") {
    report = run_phi_suite(n > 0 ? n : 20, tol > 0 ? tol : 1e-3, cfg.seed);
  } else if (cfg.suite == "lemma1") {
    report = run_lemma1_suite(n > 0 ? n : 100, tol > 0 ? tol : 1e-10, cfg.seed);
  } else {
    std::cerr << "unknown verify suite '" << cfg.suite
              << "' (expected duality|support|ordering|phi|lemma1)\n";
    return kUsageError;
  }

  std::filesystem::create_directories(cfg.out);
  const std::string path = cfg.out + "/verify_" + report.suite + ".json";
  std::ofstream(path) << report_json(report).dump(2) << "\n";

  std::cout << report.suite << ": " << (report.instances - static_cast<int>(report.failures.size()))
            << "/" << report.instances << " instances passed";
  if (!report.passed()) {
    std::cout << " -- " << report.failures.size() << " failure(s), see " << path;
  }
  std::cout << "\n";
  return report.passed() ? kOk : kAssertionFailure;
}

}  // namespace bdr::cli
