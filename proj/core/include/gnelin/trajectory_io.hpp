#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gnelin/solver.hpp"

namespace gnelin {

/// Column order of every trajectory CSV. Never reorder.
inline constexpr const char* kTrajectoryHeader =
    "iter,dist_to_star,consensus_err,dual_spread,constraint_violation,"
    "kkt_residual,lyapunov_E";

/// Shortest round-trip decimal form, so reruns are byte-identical.
std::string format_double(double value);

/// Streams records as CSV, flushing after each row so a failed run leaves
/// every completed row on disk.
class TrajectoryCsvWriter {
 public:
  explicit TrajectoryCsvWriter(std::ostream& out);
  void write(const TrajectoryRecord& record);

 private:
  std::ostream& out_;
};

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/// A CSV read back by name: one optional per row and column (empty fields are
/// nullopt).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;

  /// Throws InvalidConfig when the column does not exist.
  std::vector<std::optional<double>> column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

}  // namespace gnelin
