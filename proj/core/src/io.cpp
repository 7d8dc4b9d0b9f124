#include "pcv/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace pcv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line, const std::string& source,
                                        int lineno) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError(source, lineno, "unterminated quote");
  cells.push_back(trim(cur));
  return cells;
}

std::vector<double> parse_list(const std::string& text, const std::string& source, int line) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), source, line));
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

bool parse_bool(const std::string& text, const std::string& source, int line) {
  const std::string s = trim(text);
  if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
  if (s.empty() || s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
  throw ParseError(source, line, "expected a boolean, got '" + s + "'");
}

std::uint64_t parse_u64(const std::string& text, const std::string& source, int line) {
  const std::string s = trim(text);
  if (s.empty() || s[0] == '-') throw ParseError(source, line, "expected a non-negative integer, got '" + s + "'");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size())
    throw ParseError(source, line, "expected a non-negative integer, got '" + s + "'");
  return v;
}

}  // namespace

ParseError::ParseError(const std::string& src, int ln, const std::string& message)
    : Error(src + (ln > 0 ? ":" + std::to_string(ln) : std::string()) + ": " + message),
      source(src),
      line(ln) {}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& text, const std::string& source, int line) {
  const std::string s = trim(text);
  if (s.empty()) throw ParseError(source, line, "expected a number, got an empty cell");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw ParseError(source, line, "expected a number, got '" + s + "'");
  return v;
}

int parse_int(const std::string& text, const std::string& source, int line) {
  const std::string s = trim(text);
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE ||
      v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ParseError(source, line, "expected an integer, got '" + s + "'");
  return static_cast<int>(v);
}

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

int CsvTable::require_column(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw ParseError(source, 1, "missing column '" + name + "'");
  return c;
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(ss, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line, source, lineno);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError(source, lineno,
                       "expected " + std::to_string(t.header.size()) + " cells, got " +
                           std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.lines.push_back(lineno);
  }
  if (!have_header) throw ParseError(source, 0, "empty file (a header row is required)");
  return t;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path + ": cannot open file for writing");
  out << text;
  if (!out) throw Error(path + ": write failed");
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_text_file(path), path); }

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (filled_ == width_) throw Error("CsvWriter: row has too many cells");
  if (filled_) text_ += ',';
  if (s.find_first_of(",\"\n") != std::string::npos) {
    text_ += '"';
    for (char c : s) text_ += c == '"' ? std::string("\"\"") : std::string(1, c);
    text_ += '"';
  } else {
    text_ += s;
  }
  ++filled_;
  return *this;
}

CsvWriter& CsvWriter::cell(double x) { return cell(format_double(x)); }
CsvWriter& CsvWriter::cell(int x) { return cell(std::to_string(x)); }

CsvWriter& CsvWriter::end_row() {
  if (filled_ != width_) throw Error("CsvWriter: row has too few cells");
  text_ += '\n';
  filled_ = 0;
  return *this;
}

LoadedPanel parse_panel(const CsvTable& panel, const CsvTable& macro, const CsvTable& exog, int p,
                        const Vec& B0) {
  if (p < 1) throw Error("VAR order p must be >= 1");
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // Exogenous regressors fix T.
  const int et = exog.require_column("t");
  std::vector<int> psi_cols;
  for (int j = 1;; ++j) {
    const int c = exog.column("psi" + std::to_string(j));
    if (c < 0) break;
    psi_cols.push_back(c);
  }
  if (psi_cols.empty()) throw ParseError(exog.source, 1, "need columns psi1..psil");
  const int T = static_cast<int>(exog.rows.size());
  if (T < 1) throw ParseError(exog.source, 0, "no data rows");
  const int l = static_cast<int>(psi_cols.size());
  Mat psi = Mat::Constant(T, l, nan);
  for (std::size_t r = 0; r < exog.rows.size(); ++r) {
    const int line = exog.lines[r];
    const int t = parse_int(exog.rows[r][static_cast<std::size_t>(et)], exog.source, line);
    if (t != static_cast<int>(r) + 1)
      throw ParseError(exog.source, line, "rows must run t = 1, 2, ... without gaps");
    for (int j = 0; j < l; ++j)
      psi(t - 1, j) = parse_double(exog.rows[r][static_cast<std::size_t>(psi_cols[j])], exog.source, line);
  }

  // Panel rows, companies in order of first appearance.
  const int pt = panel.require_column("t"), pc = panel.require_column("company"),
            pb = panel.require_column("b_tilde"), pd = panel.require_column("delta_tilde"),
            pp = panel.require_column("pays_dividend");
  LoadedPanel out;
  for (const auto& row : panel.rows) {
    const auto& name = row[static_cast<std::size_t>(pc)];
    if (std::find(out.companies.begin(), out.companies.end(), name) == out.companies.end())
      out.companies.push_back(name);
  }
  const int n = static_cast<int>(out.companies.size());
  if (n < 1) throw ParseError(panel.source, 0, "no data rows");
  Mat b = Mat::Constant(T, n, nan);
  Mat Delta = Mat::Zero(T, n);
  BoolMat pays = BoolMat::Constant(T, n, false);
  std::set<std::pair<int, int>> seen;
  for (std::size_t r = 0; r < panel.rows.size(); ++r) {
    const auto& row = panel.rows[r];
    const int line = panel.lines[r];
    const int t = parse_int(row[static_cast<std::size_t>(pt)], panel.source, line);
    if (t < 1 || t > T)
      throw ParseError(panel.source, line, "t must lie in 1.." + std::to_string(T) + " (exogenous rows)");
    const int i = static_cast<int>(std::find(out.companies.begin(), out.companies.end(),
                                             row[static_cast<std::size_t>(pc)]) -
                                   out.companies.begin());
    if (!seen.insert({t, i}).second) throw ParseError(panel.source, line, "duplicate (t, company) row");
    const auto& bcell = row[static_cast<std::size_t>(pb)];
    if (!bcell.empty()) b(t - 1, i) = parse_double(bcell, panel.source, line);
    const auto& dcell = row[static_cast<std::size_t>(pd)];
    const bool paid = !dcell.empty() && parse_bool(row[static_cast<std::size_t>(pp)], panel.source, line);
    if (paid) {
      Delta(t - 1, i) = parse_double(dcell, panel.source, line);
      pays(t - 1, i) = true;
    }
  }

  // Macro file, including presample rows t = 1-p..0.
  const int mt = macro.require_column("t");
  std::vector<int> z_cols;
  for (int j = 1;; ++j) {
    const int c = macro.column("z" + std::to_string(j));
    if (c < 0) break;
    z_cols.push_back(c);
  }
  if (z_cols.empty()) throw ParseError(macro.source, 1, "need columns z1..zl");
  const int ell = static_cast<int>(z_cols.size());
  Mat z = Mat::Constant(T, ell, nan);
  Vec z0_star = Vec::Constant(ell * p, nan);
  std::set<int> macro_seen;
  for (std::size_t r = 0; r < macro.rows.size(); ++r) {
    const auto& row = macro.rows[r];
    const int line = macro.lines[r];
    const int t = parse_int(row[static_cast<std::size_t>(mt)], macro.source, line);
    if (t > T) throw ParseError(macro.source, line, "t beyond the exogenous sample");
    if (t <= -p) continue;
    if (!macro_seen.insert(t).second) throw ParseError(macro.source, line, "duplicate t");
    for (int j = 0; j < ell; ++j) {
      const auto& cell = row[static_cast<std::size_t>(z_cols[j])];
      if (cell.empty()) continue;
      const double v = parse_double(cell, macro.source, line);
      if (t >= 1)
        z(t - 1, j) = v;
      else
        z0_star(-t * ell + j) = v;
    }
  }
  if (!z0_star.allFinite())
    throw ParseError(macro.source, 0, "presample rows t = " + std::to_string(1 - p) + "..0 are required");

  // Observed prefix: b and z complete.
  int obs = 0;
  while (obs < T && b.row(obs).allFinite() && z.row(obs).allFinite()) ++obs;
  if (obs == 0) throw ParseError(panel.source, 0, "no complete observation at t = 1");
  for (int t = obs; t < T; ++t)
    if (b.row(t).array().isFinite().any() || z.row(t).array().isFinite().any())
      throw ParseError(panel.source, 0,
                         "observations at t = " + std::to_string(t + 1) +
                             " follow a gap; the observed sample must be contiguous from t = 1");

  PanelData& d = out.data;
  d.B0 = B0.size() == 0 ? Vec::Ones(n) : B0;
  if (d.B0.size() != n) throw Error("B0 has " + std::to_string(B0.size()) + " entries, panel has " + std::to_string(n) + " companies");
  if ((d.B0.array() <= 0.0).any()) throw DomainError("B0 entries must be positive");
  d.b_tilde = b;
  d.z = z;
  d.z0_star = z0_star;
  d.Delta_tilde = Delta;
  d.pays_dividend = pays;
  d.psi = psi;
  d.observed_until = obs == T ? -1 : obs;
  return out;
}

LoadedPanel load_panel(const PanelFiles& files, int p, const Vec& B0) {
  if (files.panel.empty()) throw Error("--panel is required");
  if (files.macro.empty()) throw Error("--macro is required");
  if (files.exog.empty()) throw Error("--exog is required");
  return parse_panel(read_csv(files.panel), read_csv(files.macro), read_csv(files.exog), p, B0);
}

PanelData observed_part(const PanelData& data) {
  const int T = data.last_observed();
  PanelData d = data;
  d.b_tilde = data.b_tilde.topRows(T);
  d.z = data.z.topRows(T);
  d.Delta_tilde = data.Delta_tilde.topRows(T);
  d.pays_dividend = data.pays_dividend.topRows(T);
  d.psi = data.psi.topRows(T);
  d.observed_until = -1;
  return d;
}

LifeTable parse_life_table(const CsvTable& table) {
  int cx = table.column("x");
  if (cx < 0) cx = table.column("age");
  if (cx < 0) throw ParseError(table.source, 1, "missing column 'x'");
  const int ct = table.require_column("t"), cp = table.require_column("tpx");
  LifeTable lt;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int line = table.lines[r];
    const int x = parse_int(row[static_cast<std::size_t>(cx)], table.source, line);
    const int t = parse_int(row[static_cast<std::size_t>(ct)], table.source, line);
    const double v = parse_double(row[static_cast<std::size_t>(cp)], table.source, line);
    try {
      lt.set(x, t, v);
    } catch (const Error& e) {
      throw ParseError(table.source, line, e.what());
    }
  }
  return lt;
}

LifeTable load_life_table(const std::string& path) { return parse_life_table(read_csv(path)); }

namespace {

void json_matrix(std::string& s, const Mat& m) {
  s += '[';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s += ',';
    s += '[';
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) s += ',';
      s += format_double(m(i, j));
    }
    s += ']';
  }
  s += ']';
}

Mat matrix_from_json(const nlohmann::json& j, const std::string& key, const std::string& source) {
  if (!j.contains(key)) throw ParseError(source, 0, "missing key '" + key + "'");
  const auto& a = j.at(key);
  if (!a.is_array()) throw ParseError(source, 0, "'" + key + "' must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(a.size());
  const auto cols = rows == 0 ? Eigen::Index(0) : static_cast<Eigen::Index>(a.at(0).size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& r = a.at(static_cast<std::size_t>(i));
    if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols)
      throw ParseError(source, 0, "'" + key + "' rows must have equal length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = r.at(static_cast<std::size_t>(c));
      if (!v.is_number()) throw ParseError(source, 0, "'" + key + "' entries must be numbers");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

}  // namespace

std::string params_to_json(const ModelParameters& params) {
  std::string s = "{";
  const std::pair<const char*, const Mat*> fields[] = {
      {"C_k", &params.C_k},           {"C_z", &params.C_z},         {"A", &params.A},
      {"C_m", &params.C_m},           {"Sigma_eta", &params.Sigma_eta},
      {"Sigma_ww", &params.Sigma_ww}, {"Sigma_0", &params.Sigma_0}};
  for (const auto& [name, m] : fields) {
    s += "\n  \"";
    s += name;
    s += "\": ";
    json_matrix(s, *m);
    s += ',';
  }
  s += "\n  \"mu_0\": [";
  for (Eigen::Index i = 0; i < params.mu_0.size(); ++i) {
    if (i) s += ',';
    s += format_double(params.mu_0(i));
  }
  s += "]\n}\n";
  return s;
}

ModelParameters params_from_json(const std::string& text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, e.what());
  }
  ModelParameters p;
  p.C_k = matrix_from_json(j, "C_k", source);
  p.C_z = matrix_from_json(j, "C_z", source);
  p.A = matrix_from_json(j, "A", source);
  p.C_m = matrix_from_json(j, "C_m", source);
  p.Sigma_eta = matrix_from_json(j, "Sigma_eta", source);
  p.Sigma_ww = matrix_from_json(j, "Sigma_ww", source);
  p.Sigma_0 = matrix_from_json(j, "Sigma_0", source);
  if (!j.contains("mu_0") || !j.at("mu_0").is_array()) throw ParseError(source, 0, "missing array 'mu_0'");
  const auto& mu = j.at("mu_0");
  p.mu_0.resize(static_cast<Eigen::Index>(mu.size()));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!mu.at(i).is_number()) throw ParseError(source, 0, "'mu_0' entries must be numbers");
    p.mu_0(static_cast<Eigen::Index>(i)) = mu.at(i).get<double>();
  }
  return p;
}

ModelParameters load_params(const std::string& path) {
  return params_from_json(read_text_file(path), path);
}

std::map<std::string, std::string> parse_key_values(const std::string& text,
                                                    const std::string& source) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(source, lineno, "empty key");
    if (!kv.emplace(key, trim(line.substr(eq + 1))).second)
      throw ParseError(source, lineno, "duplicate key '" + key + "'");
  }
  return kv;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "B0",        "age",      "claim",          "convention", "em_datasets", "estimate_sigma0",
      "exog",      "fund_units", "guarantee",    "horizon",    "lifetable",   "macro",
      "maturity",  "max_iter", "measure",        "out",        "p",           "panel",
      "params",    "paths",    "product",        "recovery_seeds", "seed",    "strikes",
      "t",         "tol",      "weights"};
  return k;
}

void RunConfig::apply(const std::string& key, const std::string& value, const std::string& source,
                      int line) {
  const std::string v = trim(value);
  if (key == "convention") {
    try {
      convention = convention_from_string(v);
    } catch (const Error& e) {
      throw ParseError(source, line, e.what());
    }
  } else if (key == "p") {
    p = parse_int(v, source, line);
  } else if (key == "panel") {
    panel = v;
  } else if (key == "macro") {
    macro = v;
  } else if (key == "exog") {
    exog = v;
  } else if (key == "lifetable") {
    lifetable = v;
  } else if (key == "params") {
    params = v;
  } else if (key == "out") {
    out = v;
  } else if (key == "seed") {
    seed = parse_u64(v, source, line);
  } else if (key == "paths") {
    paths = parse_u64(v, source, line);
  } else if (key == "tol") {
    tol = parse_double(v, source, line);
  } else if (key == "max_iter") {
    max_iter = parse_int(v, source, line);
  } else if (key == "estimate_sigma0") {
    estimate_sigma0 = parse_bool(v, source, line);
  } else if (key == "B0") {
    B0 = parse_list(v, source, line);
  } else if (key == "t") {
    t = parse_int(v, source, line);
  } else if (key == "maturity") {
    maturity = parse_int(v, source, line);
  } else if (key == "strikes") {
    strikes = parse_list(v, source, line);
  } else if (key == "product") {
    product = v;
  } else if (key == "age") {
    age = parse_int(v, source, line);
  } else if (key == "fund_units") {
    fund_units = parse_list(v, source, line);
  } else if (key == "guarantee") {
    guarantee = parse_list(v, source, line);
  } else if (key == "weights") {
    weights = parse_list(v, source, line);
  } else if (key == "horizon") {
    horizon = parse_int(v, source, line);
  } else if (key == "measure") {
    if (v != "real" && v != "risk-neutral")
      throw ParseError(source, line, "measure must be real or risk-neutral");
    measure = v;
  } else if (key == "claim") {
    try {
      claim_kind_from_string(v);
    } catch (const Error& e) {
      throw ParseError(source, line, e.what());
    }
    claim = v;
  } else if (key == "em_datasets") {
    em_datasets = parse_int(v, source, line);
  } else if (key == "recovery_seeds") {
    recovery_seeds = parse_int(v, source, line);
  } else {
    throw ParseError(source, line, "unknown key '" + key + "'");
  }
}

void RunConfig::apply_all(const std::map<std::string, std::string>& kv, const std::string& source) {
  for (const auto& [k, v] : kv) apply(k, v, source);
}

std::string RunConfig::serialize() const {
  std::map<std::string, std::string> kv;
  kv["B0"] = format_list(B0);
  kv["age"] = std::to_string(age);
  kv["claim"] = claim;
  kv["convention"] = to_string(convention);
  kv["em_datasets"] = std::to_string(em_datasets);
  kv["estimate_sigma0"] = estimate_sigma0 ? "true" : "false";
  kv["exog"] = exog;
  kv["fund_units"] = format_list(fund_units);
  kv["guarantee"] = format_list(guarantee);
  kv["horizon"] = std::to_string(horizon);
  kv["lifetable"] = lifetable;
  kv["macro"] = macro;
  kv["maturity"] = std::to_string(maturity);
  kv["max_iter"] = std::to_string(max_iter);
  kv["measure"] = measure;
  kv["out"] = out;
  kv["p"] = std::to_string(p);
  kv["panel"] = panel;
  kv["params"] = params;
  kv["paths"] = std::to_string(paths);
  kv["product"] = product;
  kv["recovery_seeds"] = std::to_string(recovery_seeds);
  kv["seed"] = std::to_string(seed);
  kv["strikes"] = format_list(strikes);
  kv["t"] = std::to_string(t);
  kv["tol"] = format_double(tol);
  kv["weights"] = format_list(weights);
  std::string s;
  for (const auto& [k, v] : kv) s += k + " = " + v + "\n";
  return s;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& source) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) throw ParseError(source, lineno, "duplicate key '" + key + "'");
    c.apply(key, line.substr(eq + 1), source, lineno);
  }
  return c;
}

}  // namespace pcv
