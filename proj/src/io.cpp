#include "spamiss/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spamiss/version.hpp"

namespace spamiss {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> tokens_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double_or(const std::string& s, int line, const std::string& what) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError(line, what + ": expected a number, got '" + s + "'");
  return v;
}

long parse_long_or(const std::string& s, int line, const std::string& what) {
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    throw ParseError(line, what + ": expected an integer, got '" + s + "'");
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// --- config --------------------------------------------------------------

const ConfigEntry* ConfigSection::find(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  cfg.text_ = text;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  ConfigSection* current = nullptr;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ParseError(line_no, "empty section name");
      for (const auto& s : cfg.sections_)
        if (s.name == name) throw ParseError(line_no, "duplicate section [" + name + "]");
      cfg.sections_.push_back({name, line_no, {}});
      current = &cfg.sections_.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    if (current == nullptr) throw ParseError(line_no, "entry outside any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (current->find(key) != nullptr)
      throw ParseError(line_no, "duplicate key '" + key + "' in [" + current->name + "]");
    current->entries.push_back({key, value, line_no});
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) { return parse_string(read_file(path)); }

const ConfigSection* Config::section(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

std::vector<const ConfigSection*> Config::sections_with_prefix(const std::string& prefix) const {
  std::vector<const ConfigSection*> out;
  for (const auto& s : sections_)
    if (s.name.rfind(prefix, 0) == 0) out.push_back(&s);
  return out;
}

std::optional<std::string> get_string(const ConfigSection* s, const std::string& key) {
  if (s == nullptr) return std::nullopt;
  const ConfigEntry* e = s->find(key);
  if (e == nullptr) return std::nullopt;
  return e->value;
}

std::optional<double> get_double(const ConfigSection* s, const std::string& key) {
  if (s == nullptr) return std::nullopt;
  const ConfigEntry* e = s->find(key);
  if (e == nullptr) return std::nullopt;
  return parse_double_or(e->value, e->line, key);
}

std::optional<long> get_long(const ConfigSection* s, const std::string& key) {
  if (s == nullptr) return std::nullopt;
  const ConfigEntry* e = s->find(key);
  if (e == nullptr) return std::nullopt;
  return parse_long_or(e->value, e->line, key);
}

std::optional<bool> get_bool(const ConfigSection* s, const std::string& key) {
  if (s == nullptr) return std::nullopt;
  const ConfigEntry* e = s->find(key);
  if (e == nullptr) return std::nullopt;
  if (e->value == "true" || e->value == "1") return true;
  if (e->value == "false" || e->value == "0") return false;
  throw ParseError(e->line, key + ": expected true/false, got '" + e->value + "'");
}

std::optional<std::vector<std::string>> get_tokens(const ConfigSection* s, const std::string& key) {
  if (s == nullptr) return std::nullopt;
  const ConfigEntry* e = s->find(key);
  if (e == nullptr) return std::nullopt;
  return tokens_of(e->value);
}

std::optional<Vector> get_vector(const ConfigSection* s, const std::string& key) {
  if (s == nullptr) return std::nullopt;
  const ConfigEntry* e = s->find(key);
  if (e == nullptr) return std::nullopt;
  const auto toks = tokens_of(e->value);
  Vector v(static_cast<Eigen::Index>(toks.size()));
  for (std::size_t i = 0; i < toks.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = parse_double_or(toks[i], e->line, key);
  return v;
}

// --- dataset files ---------------------------------------------------------

LocationSet read_locations_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": empty locations file");
  const auto header = split(trim(line), ',');
  if (header.size() != 3 || trim(header[0]) != "location_id")
    throw SchemaError(path + ": expected header location_id,coord1,coord2");
  std::vector<std::string> ids;
  std::vector<double> c1, c2;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto cells = split(t, ',');
    if (cells.size() != 3) throw ParseError(line_no, path + ": expected 3 columns");
    ids.push_back(trim(cells[0]));
    c1.push_back(parse_double_or(trim(cells[1]), line_no, "coord1"));
    c2.push_back(parse_double_or(trim(cells[2]), line_no, "coord2"));
  }
  Matrix coords(static_cast<Eigen::Index>(ids.size()), 2);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    coords(static_cast<Eigen::Index>(i), 0) = c1[i];
    coords(static_cast<Eigen::Index>(i), 1) = c2[i];
  }
  return LocationSet::from_coords(std::move(ids), std::move(coords));
}

void write_locations_csv(const std::string& path, const LocationSet& locations) {
  std::ostringstream out;
  out << "location_id,coord1,coord2\n";
  for (Eigen::Index s = 0; s < locations.size(); ++s)
    out << locations.ids[static_cast<std::size_t>(s)] << ',' << format_double(locations.coords(s, 0))
        << ',' << format_double(locations.coords(s, 1)) << '\n';
  atomic_write(path, out.str());
}

SpatialDataset read_dataset_csv(const std::string& observations_path,
                                const std::string& locations_path) {
  SpatialDataset data;
  data.locations = read_locations_csv(locations_path);
  const Eigen::Index s_count = data.locations.size();

  std::istringstream in(read_file(observations_path));
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(observations_path + ": empty dataset file");
  auto header = split(trim(line), ',');
  for (auto& h : header) h = trim(h);
  if (header.size() < 3 || header[0] != "location_id" || header[1] != "y")
    throw SchemaError(observations_path + ": expected header location_id,y,<covariates...>");
  for (std::size_t j = 2; j < header.size(); ++j) data.covariate_names.push_back(header[j]);
  const Eigen::Index p = data.n_covariates();

  std::map<std::string, Eigen::Index> loc_index;
  for (Eigen::Index s = 0; s < s_count; ++s) loc_index[data.locations.ids[static_cast<std::size_t>(s)]] = s;
  std::vector<std::vector<double>> ys(static_cast<std::size_t>(s_count));
  std::vector<std::vector<double>> xs(static_cast<std::size_t>(s_count));
  std::vector<std::vector<int>> obs(static_cast<std::size_t>(s_count));
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto cells = split(t, ',');
    if (static_cast<Eigen::Index>(cells.size()) != 2 + p)
      throw ParseError(line_no, observations_path + ": expected " + std::to_string(2 + p) + " columns");
    const auto it = loc_index.find(trim(cells[0]));
    if (it == loc_index.end())
      throw SchemaError(observations_path + ": line " + std::to_string(line_no) +
                        " references unknown location '" + trim(cells[0]) + "'");
    const std::size_t su = static_cast<std::size_t>(it->second);
    ys[su].push_back(parse_double_or(trim(cells[1]), line_no, "y"));
    for (Eigen::Index c = 0; c < p; ++c) {
      const std::string cell = trim(cells[static_cast<std::size_t>(2 + c)]);
      if (cell == "NA") {
        xs[su].push_back(std::numeric_limits<double>::quiet_NaN());
        obs[su].push_back(0);
      } else {
        xs[su].push_back(parse_double_or(cell, line_no, "covariate"));
        obs[su].push_back(1);
      }
    }
  }
  for (Eigen::Index s = 0; s < s_count; ++s) {
    const std::size_t su = static_cast<std::size_t>(s);
    const Eigen::Index n = static_cast<Eigen::Index>(ys[su].size());
    Vector yv(n);
    Matrix xm(n, p);
    MaskMatrix mm(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      yv[i] = ys[su][static_cast<std::size_t>(i)];
      for (Eigen::Index c = 0; c < p; ++c) {
        xm(i, c) = xs[su][static_cast<std::size_t>(i * p + c)];
        mm(i, c) = obs[su][static_cast<std::size_t>(i * p + c)];
      }
    }
    data.y.push_back(std::move(yv));
    data.x.push_back(std::move(xm));
    data.observed.push_back(std::move(mm));
  }
  return data;
}

void write_dataset_csv(const std::string& path, const SpatialDataset& data) {
  std::ostringstream out;
  out << "location_id,y";
  for (const auto& n : data.covariate_names) out << ',' << n;
  out << '\n';
  for (Eigen::Index s = 0; s < data.n_locations(); ++s) {
    const std::size_t su = static_cast<std::size_t>(s);
    for (Eigen::Index i = 0; i < data.n_obs(s); ++i) {
      out << data.locations.ids[su] << ',' << format_double(data.y[su][i]);
      for (Eigen::Index c = 0; c < data.n_covariates(); ++c) {
        if (data.observed[su](i, c) == 0)
          out << ",NA";
        else
          out << ',' << format_double(data.x[su](i, c));
      }
      out << '\n';
    }
  }
  atomic_write(path, out.str());
}

Matrix read_adjacency_csv(const std::string& path, Eigen::Index n) {
  std::istringstream in(read_file(path));
  Matrix d(n, n);
  std::string line;
  Eigen::Index row = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (row >= n) throw SchemaError(path + ": more rows than locations");
    const auto cells = split(t, ',');
    if (static_cast<Eigen::Index>(cells.size()) != n)
      throw ParseError(line_no, path + ": expected " + std::to_string(n) + " columns");
    for (Eigen::Index c = 0; c < n; ++c)
      d(row, c) = parse_double_or(trim(cells[static_cast<std::size_t>(c)]), line_no, "adjacency");
    ++row;
  }
  if (row != n) throw SchemaError(path + ": fewer rows than locations");
  return d;
}

// --- chain outputs ----------------------------------------------------------

void write_draws_tsv(const std::string& path, const ChainOutput& chain, const SpatialDataset& data,
                     const ModelSpec& spec) {
  const auto series = chain_series(chain, data, spec);
  std::ostringstream out;
  out << "deviance";
  for (const auto& [name, v] : series) out << '\t' << name;
  out << '\n';
  for (long k = 0; k < chain.n_kept(); ++k) {
    out << format_double(chain.deviance[k]);
    for (const auto& [name, v] : series) out << '\t' << format_double(v[k]);
    out << '\n';
  }
  atomic_write(path, out.str());
}

std::vector<std::pair<std::string, Vector>> read_draws_tsv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": empty draw file");
  const auto names = split(trim(line), '\t');
  std::vector<std::vector<double>> cols(names.size());
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto cells = split(t, '\t');
    if (cells.size() != names.size()) throw ParseError(line_no, path + ": ragged row");
    for (std::size_t j = 0; j < cells.size(); ++j)
      cols[j].push_back(parse_double_or(cells[j], line_no, names[j]));
  }
  std::vector<std::pair<std::string, Vector>> out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    Vector v(static_cast<Eigen::Index>(cols[j].size()));
    for (std::size_t k = 0; k < cols[j].size(); ++k) v[static_cast<Eigen::Index>(k)] = cols[j][k];
    out.emplace_back(names[j], std::move(v));
  }
  return out;
}

void write_loglik_tsv(const std::string& path, const ChainOutput& chain) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < chain.loglik_terms.cols(); ++i)
    out << (i == 0 ? "" : "\t") << "ll." << (i + 1);
  out << '\n';
  for (Eigen::Index k = 0; k < chain.loglik_terms.rows(); ++k) {
    for (Eigen::Index i = 0; i < chain.loglik_terms.cols(); ++i)
      out << (i == 0 ? "" : "\t") << format_double(chain.loglik_terms(k, i));
    out << '\n';
  }
  atomic_write(path, out.str());
}

void write_summary_tsv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "parameter\tmean\tsd\thpd_lo\thpd_hi\n";
  for (const auto& r : rows)
    out << r.parameter << '\t' << format_double(r.mean) << '\t' << format_double(r.sd) << '\t'
        << format_double(r.hpd_lo) << '\t' << format_double(r.hpd_hi) << '\n';
  atomic_write(path, out.str());
}

void write_criteria_tsv(const std::string& path, const CriteriaReport& report) {
  std::ostringstream out;
  out << "criterion\tvalue\n";
  out << "mdic\t" << format_double(report.mdic) << '\n';
  out << "mlpml\t" << format_double(report.mlpml) << '\n';
  if (report.dic_r) out << "dic_r\t" << format_double(*report.dic_r) << '\n';
  atomic_write(path, out.str());
}

CriteriaReport read_criteria_tsv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != "criterion\tvalue")
    throw SchemaError(path + ": not a criteria file");
  CriteriaReport rep;
  bool saw_mdic = false, saw_mlpml = false;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto cells = split(t, '\t');
    if (cells.size() != 2) throw ParseError(line_no, path + ": expected 2 columns");
    const double v = parse_double_or(cells[1], line_no, cells[0]);
    if (cells[0] == "mdic") {
      rep.mdic = v;
      saw_mdic = true;
    } else if (cells[0] == "mlpml") {
      rep.mlpml = v;
      saw_mlpml = true;
    } else if (cells[0] == "dic_r") {
      rep.dic_r = v;
    }
  }
  if (!saw_mdic || !saw_mlpml) throw SchemaError(path + ": missing mdic or mlpml row");
  return rep;
}

// --- manifest ---------------------------------------------------------------

std::uint64_t digest_bytes(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t digest_file(const std::string& path) { return digest_bytes(read_file(path)); }

void write_manifest(const std::string& path, const RunManifest& manifest) {
  nlohmann::json j;
  j["command"] = manifest.command;
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(manifest.config_digest));
  j["config_digest"] = std::string(buf);
  j["seed"] = manifest.seed;
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [name, digest] : manifest.input_digests) {
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    inputs[name] = std::string(buf);
  }
  j["inputs"] = inputs;
  j["version"] = manifest.version.empty() ? std::string(kVersion) : manifest.version;
  j["timestamp"] = manifest.timestamp;
  atomic_write(path, j.dump(2) + "\n");
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInputError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

// --- config -> model structures ----------------------------------------------

namespace {

CorrelationFamily parse_family(const ConfigSection* s, const std::optional<Matrix>& adjacency,
                               const std::string& section_name) {
  CorrelationFamily fam;
  const auto kind = get_string(s, "correlation").value_or("exponential");
  if (kind == "exponential") {
    fam.kind = CorrelationKind::exponential;
  } else if (kind == "car") {
    fam.kind = CorrelationKind::car;
    if (!adjacency)
      throw ValidationError("car-adjacency-missing",
                            "[" + section_name + "] uses a CAR structure but no adjacency file was given");
    fam.adjacency = *adjacency;
  } else {
    const ConfigEntry* e = s->find("correlation");
    throw ParseError(e->line, "correlation must be 'exponential' or 'car'");
  }
  return fam;
}

}  // namespace

ModelSpec resolve_model_spec(const Config& config, const SpatialDataset& data,
                             const std::optional<Matrix>& adjacency) {
  ModelSpec spec;
  std::vector<std::string> offenders;
  auto resolve_column = [&](const std::string& name) -> Eigen::Index {
    const Eigen::Index c = data.column_index(name);
    if (c < 0) offenders.push_back(name);
    return c;
  };

  const ConfigSection* resp = config.section("response");
  if (resp == nullptr)
    throw ValidationError("config-missing-section", "config needs a [response] section");
  for (const auto& name : get_tokens(resp, "predictors").value_or(std::vector<std::string>{})) {
    const Eigen::Index c = resolve_column(name);
    if (c >= 0) spec.response.predictors.push_back(c);
  }
  spec.response.has_spatial_effect = get_bool(resp, "spatial").value_or(false);
  if (spec.response.has_spatial_effect)
    spec.response.correlation = parse_family(resp, adjacency, "response");
  spec.response.fixed_sigma = get_double(resp, "fix_sigma");
  spec.response.fixed_lambda = get_double(resp, "fix_lambda");

  for (const ConfigSection* s : config.sections_with_prefix("covariate.")) {
    CovariateSubModel sub;
    const std::string name = s->name.substr(std::string("covariate.").size());
    sub.target = resolve_column(name);
    for (const auto& pname : get_tokens(s, "predictors").value_or(std::vector<std::string>{})) {
      const Eigen::Index c = resolve_column(pname);
      if (c >= 0) sub.predictors.push_back(c);
    }
    sub.has_spatial_effect = get_bool(s, "spatial").value_or(false);
    if (sub.has_spatial_effect) sub.correlation = parse_family(s, adjacency, s->name);
    sub.fixed_sigma = get_double(s, "fix_sigma");
    sub.fixed_lambda = get_double(s, "fix_lambda");
    spec.covariates.push_back(std::move(sub));
  }

  const ConfigSection* miss = config.section("missingness");
  if (miss != nullptr) {
    const auto mech = get_string(miss, "mechanism").value_or("mar");
    if (mech == "mar")
      spec.missingness.mechanism = Mechanism::mar;
    else if (mech == "mnar")
      spec.missingness.mechanism = Mechanism::mnar;
    else
      throw ParseError(miss->find("mechanism")->line, "mechanism must be 'mar' or 'mnar'");
    spec.missingness.sample_phi = get_bool(miss, "sample_phi").value_or(false);
  }
  for (const ConfigSection* s : config.sections_with_prefix("missingness.r.")) {
    IndicatorModel im;
    const std::string name = s->name.substr(std::string("missingness.r.").size());
    im.target = resolve_column(name);
    for (const auto& tok : get_tokens(s, "predictors").value_or(std::vector<std::string>{})) {
      IndicatorTerm term;
      if (tok == "y") {
        term.kind = IndicatorTerm::Kind::response;
      } else if (tok.rfind("r.", 0) == 0) {
        term.kind = IndicatorTerm::Kind::indicator;
        term.index = resolve_column(tok.substr(2));
      } else if (tok.rfind("w.", 0) == 0) {
        term.kind = IndicatorTerm::Kind::spatial_effect;
        term.index = resolve_column(tok.substr(2));
      } else {
        term.kind = IndicatorTerm::Kind::covariate;
        term.index = resolve_column(tok);
      }
      im.terms.push_back(term);
    }
    spec.missingness.models.push_back(std::move(im));
  }

  if (!offenders.empty()) {
    std::sort(offenders.begin(), offenders.end());
    offenders.erase(std::unique(offenders.begin(), offenders.end()), offenders.end());
    std::string msg = "unknown column(s):";
    for (const auto& o : offenders) msg += " " + o;
    throw SchemaError(msg);
  }
  return spec;
}

Priors parse_priors(const Config& config) {
  Priors p;
  const ConfigSection* s = config.section("priors");
  p.psi_beta = get_double(s, "psi_beta").value_or(p.psi_beta);
  p.psi_alpha = get_double(s, "psi_alpha").value_or(p.psi_alpha);
  p.psi_phi = get_double(s, "psi_phi").value_or(p.psi_phi);
  p.psi_sigma_y = get_double(s, "psi_sigma_y").value_or(p.psi_sigma_y);
  p.psi_sigma_x = get_double(s, "psi_sigma_x").value_or(p.psi_sigma_x);
  p.a_y = get_double(s, "a_y").value_or(p.a_y);
  p.b_y = get_double(s, "b_y").value_or(p.b_y);
  p.a_x = get_double(s, "a_x").value_or(p.a_x);
  p.b_x = get_double(s, "b_x").value_or(p.b_x);
  p.psi_lambda_y = get_double(s, "psi_lambda_y").value_or(p.psi_lambda_y);
  p.psi_lambda_x = get_double(s, "psi_lambda_x").value_or(p.psi_lambda_x);
  p.check();
  return p;
}

ChainConfig parse_chain_config(const Config& config) {
  ChainConfig c;
  const ConfigSection* s = config.section("chain");
  c.n_burnin = get_long(s, "burnin").value_or(c.n_burnin);
  c.n_kept = get_long(s, "kept").value_or(c.n_kept);
  c.thin = get_long(s, "thin").value_or(c.thin);
  if (const auto seed = get_long(s, "seed")) c.seed = static_cast<std::uint64_t>(*seed);
  c.step_sigma = get_double(s, "step_sigma").value_or(c.step_sigma);
  c.step_lambda = get_double(s, "step_lambda").value_or(c.step_lambda);
  c.step_phi = get_double(s, "step_phi").value_or(c.step_phi);
  c.adapt_window = get_long(s, "adapt_window").value_or(c.adapt_window);
  c.target_accept_scalar = get_double(s, "target_accept_scalar").value_or(c.target_accept_scalar);
  c.target_accept_vector = get_double(s, "target_accept_vector").value_or(c.target_accept_vector);
  c.check();
  return c;
}

SimDesign parse_sim_design(const Config& config) {
  SimDesign d;
  const ConfigSection* s = config.section("sim");
  d.n_locations = get_long(s, "locations").value_or(d.n_locations);
  d.domain = get_double(s, "domain").value_or(d.domain);
  d.obs_per_location = get_long(s, "obs_per_location").value_or(d.obs_per_location);
  d.redraw_locations = get_bool(s, "redraw_locations").value_or(d.redraw_locations);
  if (d.n_locations < 1 || d.obs_per_location < 1 || !(d.domain > 0.0))
    throw ValidationError("sim-design", "locations, obs_per_location and domain must be positive");
  return d;
}

SimTruths parse_sim_truths(const Config& config) {
  SimTruths t = SimTruths::reference();
  const ConfigSection* s = config.section("sim");
  if (const auto v = get_vector(s, "beta")) {
    if (v->size() != 4) throw ValidationError("sim-truths", "beta needs 4 values");
    t.beta = *v;
  }
  t.tau_y = get_double(s, "tau_y").value_or(t.tau_y);
  t.tau_x1 = get_double(s, "tau_x1").value_or(t.tau_x1);
  t.tau_x2 = get_double(s, "tau_x2").value_or(t.tau_x2);
  t.sigma_y = get_double(s, "sigma_y").value_or(t.sigma_y);
  t.sigma_x1 = get_double(s, "sigma_x1").value_or(t.sigma_x1);
  t.sigma_x2 = get_double(s, "sigma_x2").value_or(t.sigma_x2);
  t.lambda_y = get_double(s, "lambda_y").value_or(t.lambda_y);
  t.lambda_x1 = get_double(s, "lambda_x1").value_or(t.lambda_x1);
  t.lambda_x2 = get_double(s, "lambda_x2").value_or(t.lambda_x2);
  t.coef_x3_in_x1 = get_double(s, "coef_x3_in_x1").value_or(t.coef_x3_in_x1);
  t.coef_x1_in_x2 = get_double(s, "coef_x1_in_x2").value_or(t.coef_x1_in_x2);
  if (const auto v = get_vector(s, "phi1")) {
    if (v->size() != 3) throw ValidationError("sim-truths", "phi1 needs 3 values");
    t.phi1 = *v;
  }
  if (const auto v = get_vector(s, "phi2")) {
    if (v->size() != 4) throw ValidationError("sim-truths", "phi2 needs 4 values");
    t.phi2 = *v;
  }
  if (const auto v = get_vector(s, "phi1_w")) {
    if (v->size() != 2) throw ValidationError("sim-truths", "phi1_w needs 2 values");
    t.phi1_w = *v;
  }
  if (const auto v = get_vector(s, "phi2_w")) {
    if (v->size() != 2) throw ValidationError("sim-truths", "phi2_w needs 2 values");
    t.phi2_w = *v;
  }
  return t;
}

std::map<std::string, double> parse_truths(const Config& config) {
  std::map<std::string, double> out;
  const ConfigSection* s = config.section("truths");
  if (s == nullptr) return out;
  for (const auto& e : s->entries) out[e.key] = parse_double_or(e.value, e.line, e.key);
  return out;
}

}  // namespace spamiss
