#include "spamiss/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "spamiss/io.hpp"
#include "spamiss/version.hpp"

namespace spamiss {

namespace {

namespace fs = std::filesystem;

std::string out_path(const CliOptions& opts, const std::string& name) {
  return (fs::path(opts.out_dir) / name).string();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest base_manifest(const CliOptions& opts, const std::string& command, const Config& cfg,
                          std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.config_digest = digest_bytes(cfg.text());
  m.seed = seed;
  m.version = kVersion;
  m.timestamp = utc_timestamp();
  if (!opts.config_path.empty()) m.input_digests[opts.config_path] = digest_file(opts.config_path);
  return m;
}

std::string replicate_name(long t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rep_%04ld", t + 1);
  return buf;
}

std::uint64_t effective_seed(const CliOptions& opts, const Config& cfg) {
  if (opts.seed) return *opts.seed;
  return parse_chain_config(cfg).seed;
}

struct GeneratedReplicate {
  SpatialDataset data;
  Replicate full;  // pre-mask data and latent fields
  std::vector<MaskMatrix> mask;
};

GeneratedReplicate generate_replicate(const SimDesign& design, const SimTruths& truths,
                                      std::uint64_t seed, long t,
                                      const std::optional<LocationSet>& fixed_locations) {
  GeneratedReplicate g;
  Rng data_rng = Rng(seed).fork("sim-data." + std::to_string(t));
  g.full = fixed_locations ? gen_replicate_at(*fixed_locations, design, truths, data_rng)
                           : gen_replicate(design, truths, data_rng);
  Rng mask_rng = Rng(seed).fork("sim-mask." + std::to_string(t));
  g.mask = gen_missingness(g.full, truths, mask_rng);
  g.data = g.full.data;
  apply_missingness(g.data, g.mask);
  return g;
}

void print_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << std::left << std::setw(20) << "parameter" << std::right << std::setw(12) << "mean"
     << std::setw(12) << "sd" << std::setw(12) << "hpd_lo" << std::setw(12) << "hpd_hi" << '\n';
  os << std::setprecision(4) << std::fixed;
  for (const auto& r : rows)
    os << std::left << std::setw(20) << r.parameter << std::right << std::setw(12) << r.mean
       << std::setw(12) << r.sd << std::setw(12) << r.hpd_lo << std::setw(12) << r.hpd_hi << '\n';
  os.unsetf(std::ios::fixed);
  os << std::setprecision(6);
}

std::string truths_sidecar(const SimTruths& t, const SimDesign& d) {
  std::ostringstream out;
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "# generating values; [truths] maps them onto the reference model's parameters\n";
  out << "[sim]\n";
  out << "locations = " << d.n_locations << "\n";
  out << "domain = " << num(d.domain) << "\n";
  out << "obs_per_location = " << d.obs_per_location << "\n";
  out << "redraw_locations = " << (d.redraw_locations ? "true" : "false") << "\n";
  out << "beta = " << num(t.beta[0]) << " " << num(t.beta[1]) << " " << num(t.beta[2]) << " "
      << num(t.beta[3]) << "\n";
  out << "tau_y = " << num(t.tau_y) << "\ntau_x1 = " << num(t.tau_x1)
      << "\ntau_x2 = " << num(t.tau_x2) << "\n";
  out << "sigma_y = " << num(t.sigma_y) << "\nsigma_x1 = " << num(t.sigma_x1)
      << "\nsigma_x2 = " << num(t.sigma_x2) << "\n";
  out << "lambda_y = " << num(t.lambda_y) << "\nlambda_x1 = " << num(t.lambda_x1)
      << "\nlambda_x2 = " << num(t.lambda_x2) << "\n";
  out << "coef_x3_in_x1 = " << num(t.coef_x3_in_x1) << "\ncoef_x1_in_x2 = " << num(t.coef_x1_in_x2)
      << "\n";
  out << "phi1 = " << num(t.phi1[0]) << " " << num(t.phi1[1]) << " " << num(t.phi1[2]) << "\n";
  out << "phi2 = " << num(t.phi2[0]) << " " << num(t.phi2[1]) << " " << num(t.phi2[2]) << " "
      << num(t.phi2[3]) << "\n";
  if (t.phi1_w.size() == 2 && (t.phi1_w[0] != 0.0 || t.phi1_w[1] != 0.0))
    out << "phi1_w = " << num(t.phi1_w[0]) << " " << num(t.phi1_w[1]) << "\n";
  if (t.phi2_w.size() == 2 && (t.phi2_w[0] != 0.0 || t.phi2_w[1] != 0.0))
    out << "phi2_w = " << num(t.phi2_w[0]) << " " << num(t.phi2_w[1]) << "\n";
  out << "\n[truths]\n";
  for (int j = 0; j < 4; ++j) out << "beta." << j << " = " << num(t.beta[j]) << "\n";
  out << "tau_y = " << num(t.tau_y) << "\n";
  out << "sigma_y = " << num(t.sigma_y) << "\n";
  out << "log_lambda_y = " << num(std::log(t.lambda_y)) << "\n";
  out << "alpha.x1.0 = 0\nalpha.x1.1 = " << num(t.coef_x3_in_x1) << "\n";
  out << "tau_x.x1 = " << num(t.tau_x1) << "\n";
  out << "sigma_x.x1 = " << num(t.sigma_x1) << "\n";
  out << "log_lambda_x.x1 = " << num(std::log(t.lambda_x1)) << "\n";
  out << "alpha.x2.0 = 0\nalpha.x2.1 = 0\nalpha.x2.2 = " << num(t.coef_x1_in_x2) << "\n";
  out << "tau_x.x2 = " << num(t.tau_x2) << "\n";
  out << "sigma_x.x2 = " << num(t.sigma_x2) << "\n";
  out << "log_lambda_x.x2 = " << num(std::log(t.lambda_x2)) << "\n";
  return out.str();
}

}  // namespace

void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
  if (n <= 0) return;
  long workers = threads > 0 ? threads : static_cast<long>(std::thread::hardware_concurrency());
  workers = std::max<long>(1, std::min(workers, n));
  if (workers == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&]() {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (long w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

void cmd_simulate(const CliOptions& opts) {
  const Config cfg = Config::parse_file(opts.config_path);
  const SimDesign design = parse_sim_design(cfg);
  SimTruths truths = parse_sim_truths(cfg);
  const ConfigSection* sim = cfg.section("sim");
  const long t_count = get_long(sim, "replicates").value_or(100);
  if (t_count < 1) throw ValidationError("sim-replicates", "need at least one replicate");
  const std::uint64_t seed = effective_seed(opts, cfg);

  if (get_bool(sim, "calibrate").value_or(false)) {
    PatternRates targets{0.3282, 0.3927, 0.2872};
    if (const auto v = get_vector(sim, "calibration_targets")) {
      if (v->size() != 3) throw ValidationError("sim-truths", "calibration_targets needs 3 values");
      targets = {(*v)[0], (*v)[1], (*v)[2]};
    }
    const long k = get_long(sim, "calibration_replicates").value_or(40);
    Rng rng(seed);
    const CalibrationResult cal = calibrate_phi(design, truths, targets, rng, k);
    truths.phi1 = cal.phi1;
    truths.phi2 = cal.phi2;
    std::cout << "calibrated phi1 = " << cal.phi1.transpose() << ", phi2 = " << cal.phi2.transpose()
              << "\n  pattern rates (" << cal.achieved.only_x1 << ", " << cal.achieved.only_x2
              << ", " << cal.achieved.both << ")\n";
  }

  std::optional<LocationSet> fixed_locations;
  if (!design.redraw_locations) {
    Rng loc_rng = Rng(seed).fork("locations");
    fixed_locations = draw_locations(design, loc_rng);
  }

  std::ostringstream rates_out;
  rates_out << "replicate\tonly_x1\tonly_x2\tboth\n";
  PatternRates avg;
  for (long t = 0; t < t_count; ++t) {
    GeneratedReplicate g = generate_replicate(design, truths, seed, t, fixed_locations);
    const PatternRates r = pattern_rates(g.mask);
    avg.only_x1 += r.only_x1 / static_cast<double>(t_count);
    avg.only_x2 += r.only_x2 / static_cast<double>(t_count);
    avg.both += r.both / static_cast<double>(t_count);
    rates_out << (t + 1) << '\t' << r.only_x1 << '\t' << r.only_x2 << '\t' << r.both << '\n';
    const std::string stem = replicate_name(t);
    write_dataset_csv(out_path(opts, stem + ".csv"), g.data);
    write_locations_csv(out_path(opts, stem + "_locations.csv"), g.data.locations);
  }
  rates_out << "average\t" << avg.only_x1 << '\t' << avg.only_x2 << '\t' << avg.both << '\n';
  atomic_write(out_path(opts, "pattern_rates.tsv"), rates_out.str());
  atomic_write(out_path(opts, "truths.ini"), truths_sidecar(truths, design));
  write_manifest(out_path(opts, "manifest.json"), base_manifest(opts, "simulate", cfg, seed));
  std::cout << "simulate: wrote " << t_count << " replicate(s) to " << opts.out_dir
            << "; average pattern rates (" << avg.only_x1 << ", " << avg.only_x2 << ", " << avg.both
            << ")\n";
}

void cmd_fit(const CliOptions& opts) {
  const Config cfg = Config::parse_file(opts.config_path);
  const ConfigSection* data_sec = cfg.section("data");
  const std::string obs_path =
      !opts.dataset_path.empty() ? opts.dataset_path
                                 : get_string(data_sec, "observations").value_or("");
  const std::string loc_path = !opts.locations_path.empty()
                                   ? opts.locations_path
                                   : get_string(data_sec, "locations").value_or("");
  if (obs_path.empty() || loc_path.empty())
    throw ValidationError("config-missing-data",
                          "fit needs an observations CSV and a locations CSV "
                          "(positional argument / --locations or the [data] section)");

  SpatialDataset data = read_dataset_csv(obs_path, loc_path);
  if (opts.cc) data = complete_cases(data);

  std::optional<Matrix> adjacency;
  if (const auto adj_path = get_string(data_sec, "adjacency"))
    adjacency = read_adjacency_csv(*adj_path, data.n_locations());

  ModelSpec spec = resolve_model_spec(cfg, data, adjacency);
  if (opts.cc) {
    spec.missingness.models.clear();
    spec.missingness.sample_phi = false;
  }
  const Priors priors = parse_priors(cfg);
  ChainConfig chain_cfg = parse_chain_config(cfg);
  if (opts.seed) chain_cfg.seed = *opts.seed;

  const ChainOutput chain = run_chain(spec, data, priors, chain_cfg);

  const auto summary = summarize_chain(chain, data, spec);
  CriteriaReport criteria;
  criteria.mdic = mdic(chain, data, spec);
  criteria.mlpml = mlpml(chain).mlpml;
  if (chain.phi_sampled) criteria.dic_r = dic_r(chain, data, spec);

  write_draws_tsv(out_path(opts, "draws.tsv"), chain, data, spec);
  write_loglik_tsv(out_path(opts, "loglik.tsv"), chain);
  write_summary_tsv(out_path(opts, "summary.tsv"), summary);
  write_criteria_tsv(out_path(opts, "criteria.tsv"), criteria);
  RunManifest manifest = base_manifest(opts, "fit", cfg, chain_cfg.seed);
  manifest.input_digests[obs_path] = digest_file(obs_path);
  manifest.input_digests[loc_path] = digest_file(loc_path);
  write_manifest(out_path(opts, "manifest.json"), manifest);

  std::cout << "fit: " << chain.n_kept() << " kept draws";
  if (opts.cc) std::cout << " (complete cases)";
  std::cout << "\n";
  for (const auto& a : chain.acceptance) {
    std::cout << "  accept[" << a.block << "] = " << a.acceptance_rate;
    if (std::isfinite(a.final_step)) std::cout << " (step " << a.final_step << ")";
    std::cout << "\n";
  }
  std::cout << "mDIC = " << criteria.mdic << "\nmLPML = " << criteria.mlpml << "\n";
  if (criteria.dic_r) std::cout << "DIC(R) = " << *criteria.dic_r << "\n";
  print_summary(std::cout, summary);
}

void cmd_compare(const CliOptions& opts) {
  if (opts.inputs.empty())
    throw ValidationError("compare-inputs", "compare needs at least one criteria file or fit directory");
  struct Row {
    std::string name;
    CriteriaReport criteria;
    long mdic_rank = 0, mlpml_rank = 0;
  };
  std::vector<Row> rows;
  for (const auto& input : opts.inputs) {
    std::string path = input;
    if (fs::is_directory(path)) path = (fs::path(path) / "criteria.tsv").string();
    rows.push_back({input, read_criteria_tsv(path), 0, 0});
  }
  // Competition ranking; equal values share a rank and get flagged as ties.
  auto rank_by = [&rows](auto key, bool ascending, long Row::*field) {
    for (auto& r : rows) {
      long rank = 1;
      for (const auto& other : rows) {
        const double a = key(r.criteria), b = key(other.criteria);
        if ((ascending && b < a) || (!ascending && b > a)) ++rank;
      }
      r.*field = rank;
    }
  };
  rank_by([](const CriteriaReport& c) { return c.mdic; }, true, &Row::mdic_rank);
  rank_by([](const CriteriaReport& c) { return c.mlpml; }, false, &Row::mlpml_rank);

  bool tie = false, disagree = false;
  for (const auto& a : rows)
    for (const auto& b : rows)
      if (&a != &b && (a.criteria.mdic == b.criteria.mdic || a.criteria.mlpml == b.criteria.mlpml))
        tie = true;
  for (const auto& r : rows)
    if (r.mdic_rank != r.mlpml_rank) disagree = true;

  std::ostringstream out;
  out << "model\tmdic\tmdic_rank\tmlpml\tmlpml_rank\n";
  for (const auto& r : rows)
    out << r.name << '\t' << r.criteria.mdic << '\t' << r.mdic_rank << '\t' << r.criteria.mlpml
        << '\t' << r.mlpml_rank << '\n';
  if (tie) out << "# tie: at least two models share a criterion value\n";
  if (disagree) out << "# note: mDIC and mLPML rankings disagree\n";
  const std::string table = out.str();
  std::cout << table;
  atomic_write(out_path(opts, "comparison.tsv"), table);
}

void cmd_replicate_study(const CliOptions& opts) {
  const Config cfg = Config::parse_file(opts.config_path);
  const SimDesign design = parse_sim_design(cfg);
  const SimTruths truths = parse_sim_truths(cfg);
  const ConfigSection* study = cfg.section("study");
  const long t_count = get_long(study, "replicates").value_or(0);
  if (t_count < 1)
    throw ValidationError("study-replicates", "[study] replicates must be at least 1");
  const bool cc = opts.cc || get_bool(study, "cc").value_or(false);
  const std::map<std::string, double> truth_map = parse_truths(cfg);
  if (truth_map.empty())
    throw ValidationError("truths-missing", "replicate-study needs a [truths] section");
  const Priors priors = parse_priors(cfg);
  ChainConfig chain_template = parse_chain_config(cfg);
  if (opts.seed) chain_template.seed = *opts.seed;
  const std::uint64_t seed = chain_template.seed;

  std::optional<LocationSet> fixed_locations;
  if (!design.redraw_locations) {
    Rng loc_rng = Rng(seed).fork("locations");
    fixed_locations = draw_locations(design, loc_rng);
  }

  struct RepResult {
    std::vector<SummaryRow> summary;
    double mdic = 0.0, mlpml = 0.0;
  };
  std::vector<RepResult> results(static_cast<std::size_t>(t_count));
  parallel_for(t_count, opts.threads, [&](long t) {
    GeneratedReplicate g = generate_replicate(design, truths, seed, t, fixed_locations);
    SpatialDataset data = cc ? complete_cases(g.data) : g.data;
    ModelSpec spec = resolve_model_spec(cfg, data, std::nullopt);
    if (cc) {
      spec.missingness.models.clear();
      spec.missingness.sample_phi = false;
    }
    ChainConfig chain_cfg = chain_template;
    chain_cfg.seed = Rng(seed).fork("chain." + std::to_string(t)).seed();
    const ChainOutput chain = run_chain(spec, data, priors, chain_cfg);
    RepResult& r = results[static_cast<std::size_t>(t)];
    r.summary = summarize_chain(chain, data, spec);
    r.mdic = mdic(chain, data, spec);
    r.mlpml = mlpml(chain).mlpml;
  });

  // Metric rows in the first replicate's summary order, restricted to the
  // parameters with declared truths.
  std::vector<std::string> order;
  for (const auto& row : results.front().summary)
    if (truth_map.count(row.parameter) != 0) order.push_back(row.parameter);
  for (const auto& [name, value] : truth_map)
    if (std::find(order.begin(), order.end(), name) == order.end())
      throw ValidationError("unknown-truth-parameter",
                            "[truths] names '" + name + "' which the fit does not estimate");

  std::ostringstream out;
  out << "parameter\ttruth\tbias\tsd\tmse\tcp\n";
  for (const auto& name : order) {
    std::vector<ReplicateEstimate> est;
    for (const auto& r : results)
      for (const auto& row : r.summary)
        if (row.parameter == name) est.push_back({row.mean, row.sd, row.hpd_lo, row.hpd_hi});
    const SimMetrics m = sim_metrics(est, truth_map.at(name));
    out << name << '\t' << truth_map.at(name) << '\t' << m.bias << '\t' << m.sd << '\t' << m.mse
        << '\t' << m.cp << '\n';
  }
  const std::string table = out.str();
  atomic_write(out_path(opts, "metrics.tsv"), table);

  double mean_mdic = 0.0, mean_mlpml = 0.0;
  for (const auto& r : results) {
    mean_mdic += r.mdic / static_cast<double>(t_count);
    mean_mlpml += r.mlpml / static_cast<double>(t_count);
  }
  std::ostringstream crit;
  crit << "criterion\tmean\n";
  crit << "mdic\t" << mean_mdic << '\n';
  crit << "mlpml\t" << mean_mlpml << '\n';
  atomic_write(out_path(opts, "criteria_means.tsv"), crit.str());
  write_manifest(out_path(opts, "manifest.json"),
                 base_manifest(opts, cc ? "replicate-study --cc" : "replicate-study", cfg, seed));

  std::cout << "replicate-study: " << t_count << " replicate(s)" << (cc ? " (complete cases)" : "")
            << "\nmean mDIC = " << mean_mdic << ", mean mLPML = " << mean_mlpml << "\n"
            << table;
}

void cmd_summarize(const CliOptions& opts) {
  if (opts.inputs.empty())
    throw ValidationError("summarize-inputs", "summarize needs a draw file");
  const auto series = read_draws_tsv(opts.inputs.front());
  std::vector<SummaryRow> rows;
  for (const auto& [name, draws] : series) {
    if (name == "deviance" || name.rfind("w_", 0) == 0 || name.rfind("imp.", 0) == 0) continue;
    rows.push_back(summary_row(name, draws));
    if (name.rfind("lambda_", 0) == 0)
      rows.push_back(summary_row("log_" + name, draws.array().log().matrix()));
  }
  write_summary_tsv(out_path(opts, "summary.tsv"), rows);
  print_summary(std::cout, rows);
}

}  // namespace spamiss
