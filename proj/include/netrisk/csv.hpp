#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace netrisk::csv {

/// Long-format CSV contents. Lines starting with '#' are skipped on read, so
/// files written by this library round-trip.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;           // -1 if absent
  int require_column(const std::string& name) const;   // throws IoFailure
};

Table read_table(const std::string& path);

double parse_double(const std::string& cell);
long parse_long(const std::string& cell);

/// Locale-independent shortest-exact formatting for doubles; byte-stable
/// across runs for identical values.
std::string format_double(double value);

/// Incremental CSV writer. `meta` is emitted as a single leading '# ' comment.
class Writer {
 public:
  Writer(const std::string& path, const std::string& meta);
  ~Writer();
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  struct Impl;
  Impl* impl_;
};

/// Dense matrix with a leading label column and a label header row.
void write_matrix(const std::string& path, const std::string& meta,
                  const std::vector<std::string>& labels, const Eigen::MatrixXd& m);

struct LabeledMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd values;
};

LabeledMatrix read_matrix(const std::string& path);

/// Standard first-line comment: tool version, seed, config hash.
std::string meta_line(std::uint64_t seed, std::uint64_t config_hash);

/// FNV-1a over a string; used to stamp outputs with a config fingerprint.
std::uint64_t fnv1a(const std::string& text);

}  // namespace netrisk::csv
