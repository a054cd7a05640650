#include "gnelin/trajectory_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gnelin/error.hpp"

namespace gnelin {

namespace {

std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

TrajectoryCsvWriter::TrajectoryCsvWriter(std::ostream& out) : out_(out) {
  out_ << kTrajectoryHeader << '\n';
  out_.flush();
}

void TrajectoryCsvWriter::write(const TrajectoryRecord& r) {
  out_ << r.iter << ',' << opt_field(r.dist_to_star) << ','
       << format_double(r.consensus_error) << ',' << format_double(r.dual_spread)
       << ',' << format_double(r.constraint_violation) << ','
       << format_double(r.kkt_residual) << ',' << opt_field(r.lyapunov_E) << '\n';
  out_.flush();
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  TrajectoryCsvWriter w(out);
  for (const auto& r : trajectory.records) w.write(r);
}

std::vector<std::optional<double>> CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  require(it != header.end(), Errc::InvalidConfig,
          "CSV has no column \"" + name + "\"");
  const auto idx = static_cast<std::size_t>(it - header.begin());
  std::vector<std::optional<double>> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(idx < row.size() ? row[idx] : std::nullopt);
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::Io, "CSV is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::optional<double>> row;
    for (const auto& cell : split(line)) {
      if (cell.empty()) {
        row.emplace_back();
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      require(res.ec == std::errc(), Errc::Io, "unparsable CSV cell \"" + cell + "\"");
      row.emplace_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::Io, "cannot open " + path);
  return read_csv(in);
}

}  // namespace gnelin
