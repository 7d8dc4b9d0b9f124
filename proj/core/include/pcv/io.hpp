#pragma once

#include "pcv/em.hpp"
#include "pcv/hedging.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pcv {

class ParseError : public Error {
 public:
  ParseError(const std::string& source, int line, const std::string& message);
  std::string source;
  int line;  // 1-based; 0 when not tied to a line
};

// Shortest text that reads back to the same double (17 significant digits).
std::string format_double(double x);
double parse_double(const std::string& text, const std::string& source, int line);
int parse_int(const std::string& text, const std::string& source, int line);

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;  // source line of each row

  int column(const std::string& name) const;  // -1 when absent
  int require_column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text, const std::string& source);
CsvTable read_csv(const std::string& path);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double x);
  CsvWriter& cell(int x);
  CsvWriter& end_row();
  const std::string& str() const { return text_; }

 private:
  std::size_t width_;
  std::size_t filled_ = 0;
  std::string text_;
};

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// Panel assembled from the panel, macro and exogenous files. T is the number
// of exogenous rows; b_tilde and z are NaN after the last observed date.
struct PanelFiles {
  std::string panel;
  std::string macro;
  std::string exog;
};

struct LoadedPanel {
  PanelData data;
  std::vector<std::string> companies;  // order of first appearance
};

LoadedPanel load_panel(const PanelFiles& files, int p, const Vec& B0);
LoadedPanel parse_panel(const CsvTable& panel, const CsvTable& macro, const CsvTable& exog, int p,
                        const Vec& B0);

// Rows 1..last_observed() only.
PanelData observed_part(const PanelData& data);

// Columns x (or age), t, tpx.
LifeTable load_life_table(const std::string& path);
LifeTable parse_life_table(const CsvTable& table);

std::string params_to_json(const ModelParameters& params);
ModelParameters params_from_json(const std::string& text, const std::string& source);
ModelParameters load_params(const std::string& path);

// Flat key = value text; '#' starts a comment.
std::map<std::string, std::string> parse_key_values(const std::string& text,
                                                    const std::string& source);

struct RunConfig {
  DividendConvention convention = DividendConvention::BookValue;
  int p = 1;
  std::string panel;
  std::string macro;
  std::string exog;
  std::string lifetable;
  std::string params;
  std::string out = ".";
  std::uint64_t seed = 20240601;
  std::uint64_t paths = 1000000;
  double tol = 1e-7;
  int max_iter = 500;
  bool estimate_sigma0 = true;
  std::vector<double> B0;        // empty means ones
  int t = -1;                    // valuation date; -1 means last observed
  int maturity = -1;
  std::vector<double> strikes;
  std::string product = "seg-endow";
  int age = 40;
  std::vector<double> fund_units;
  std::vector<double> guarantee;
  std::vector<double> weights;   // empty means ones
  int horizon = 1;
  std::string measure = "real";
  std::string claim = "call";
  int em_datasets = 20;
  int recovery_seeds = 50;

  // Keys accepted by apply(); unknown keys are rejected.
  static const std::vector<std::string>& keys();
  void apply(const std::string& key, const std::string& value, const std::string& source,
             int line = 0);
  void apply_all(const std::map<std::string, std::string>& kv, const std::string& source);
  // Sorted key = value lines, numbers with 17 significant digits.
  std::string serialize() const;
  static RunConfig parse(const std::string& text, const std::string& source = "config");
  bool operator==(const RunConfig&) const = default;
};

}  // namespace pcv
