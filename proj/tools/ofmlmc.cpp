// Command-line front end: configure, run, resume, and post-process sampling
// campaigns. See README.md for the configuration format and store layout.

#include <CLI11.hpp>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <ofmlmc/driver.hpp>

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-fidelity multi-level Monte Carlo campaigns"};
  app.require_subcommand(1);

  std::string store_dir;
  int workers = 1;

  auto* run = app.add_subcommand("run", "execute a campaign from a config file");
  std::string config_path;
  run->add_option("config", config_path, "campaign configuration file")->required();
  run->add_option("--store", store_dir, "store root (default: $OFMLMC_STORE or ./ofmlmc_store)");
  run->add_option("--workers", workers, "concurrent samples")->check(CLI::PositiveNumber);

  auto* resume = app.add_subcommand("resume", "continue a persisted campaign");
  std::string resume_id;
  resume->add_option("id", resume_id, "campaign id")->required();
  resume->add_option("--store", store_dir, "store root");
  resume->add_option("--workers", workers, "concurrent samples")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "rebuild report and statistics products");
  std::string report_id, qoi_arg, products_arg = "report";
  report->add_option("id", report_id, "campaign id")->required();
  report->add_option("--store", store_dir, "store root");
  report->add_option("--qoi", qoi_arg, "QoI name(s), comma separated");
  report->add_option("--products", products_arg,
                     "products: report,bands,pdf,correlations,joint,speedup,cloud");

  auto* compare = app.add_subcommand("compare", "print the method comparison table");
  std::string compare_id;
  compare->add_option("id", compare_id, "campaign id")->required();
  compare->add_option("--store", store_dir, "store root");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed())
    return ofmlmc::cmd_run(config_path, store_dir, workers, std::cout, std::cerr);
  if (resume->parsed())
    return ofmlmc::cmd_resume(resume_id, store_dir, workers, std::cout, std::cerr);
  if (report->parsed())
    return ofmlmc::cmd_report(report_id, store_dir, split_csv(qoi_arg),
                              split_csv(products_arg), std::cout, std::cerr);
  if (compare->parsed())
    return ofmlmc::cmd_compare(compare_id, store_dir, std::cout, std::cerr);
  return 1;
}
