#include "netrisk/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "netrisk/error.hpp"
#include "netrisk/version.hpp"

namespace netrisk::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

int Table::require_column(const std::string& name) const {
  const int idx = column(name);
  if (idx < 0) throw Error(ErrorCode::IoFailure, "missing column '" + name + "'");
  return idx;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  Table t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      t.columns = split_line(line);
      have_header = true;
    } else {
      auto cells = split_line(line);
      if (cells.size() != t.columns.size())
        throw Error(ErrorCode::IoFailure, path + ": row width differs from header");
      t.rows.push_back(std::move(cells));
    }
  }
  if (!have_header) throw Error(ErrorCode::IoFailure, path + ": no header row");
  return t;
}

double parse_double(const std::string& cell) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str()) throw Error(ErrorCode::IoFailure, "not a number: '" + cell + "'");
  return v;
}

long parse_long(const std::string& cell) {
  char* end = nullptr;
  const long v = std::strtol(cell.c_str(), &end, 10);
  if (end == cell.c_str()) throw Error(ErrorCode::IoFailure, "not an integer: '" + cell + "'");
  return v;
}

std::string format_double(double value) {
  char buf[40];
  // Shortest representation that parses back exactly.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, value);
    if (std::strtod(buf, nullptr) == value) return buf;
  }
  return buf;
}

struct Writer::Impl {
  std::ofstream out;
  std::string path;
};

Writer::Writer(const std::string& path, const std::string& meta) : impl_(new Impl) {
  impl_->path = path;
  impl_->out.open(path);
  if (!impl_->out) {
    delete impl_;
    throw Error(ErrorCode::IoFailure, "cannot write " + path);
  }
  if (!meta.empty()) impl_->out << "# " << meta << "\n";
}

Writer::~Writer() { delete impl_; }

void Writer::header(const std::vector<std::string>& columns) { row(columns); }

void Writer::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) impl_->out << ',';
    impl_->out << cells[i];
  }
  impl_->out << '\n';
}

void Writer::close() {
  impl_->out.close();
  if (!impl_->out) throw Error(ErrorCode::IoFailure, "failed writing " + impl_->path);
}

void write_matrix(const std::string& path, const std::string& meta,
                  const std::vector<std::string>& labels, const Eigen::MatrixXd& m) {
  if (static_cast<Eigen::Index>(labels.size()) != m.rows() || m.rows() != m.cols())
    throw Error(ErrorCode::ShapeMismatch, "matrix/labels size mismatch writing " + path);
  Writer w(path, meta);
  std::vector<std::string> head{"unit"};
  head.insert(head.end(), labels.begin(), labels.end());
  w.header(head);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> cells{labels[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < m.cols(); ++j) cells.push_back(format_double(m(i, j)));
    w.row(cells);
  }
  w.close();
}

LabeledMatrix read_matrix(const std::string& path) {
  const Table t = read_table(path);
  if (t.columns.size() < 2) throw Error(ErrorCode::IoFailure, path + ": not a labeled matrix");
  LabeledMatrix lm;
  const std::size_t n = t.columns.size() - 1;
  if (t.rows.size() != n) throw Error(ErrorCode::ShapeMismatch, path + ": matrix not square");
  lm.labels.assign(t.columns.begin() + 1, t.columns.end());
  lm.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (t.rows[i][0] != lm.labels[i])
      throw Error(ErrorCode::IoFailure, path + ": row labels disagree with header");
    for (std::size_t j = 0; j < n; ++j)
      lm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parse_double(t.rows[i][j + 1]);
  }
  return lm;
}

std::string meta_line(std::uint64_t seed, std::uint64_t config_hash) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "netrisk %s seed=%llu config=%016llx", kVersion,
                static_cast<unsigned long long>(seed),
                static_cast<unsigned long long>(config_hash));
  return buf;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace netrisk::csv
