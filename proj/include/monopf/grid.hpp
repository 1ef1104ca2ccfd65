#pragma once

// Network data model: bus typing, series-line admittances, and the bus
// admittance matrix Y = G + jB. Bus 0 is always the slack bus with V_0 = 1.

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace monopf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class BusType { slack, pv, pq };

[[nodiscard]] const char* to_string(BusType type) noexcept;
[[nodiscard]] BusType bus_type_from_string(std::string_view name);

struct Bus {
  int id = 0;  // external (case file) bus number
  BusType type = BusType::pq;
  double v_set = 1.0;  // magnitude setpoint in p.u.; used for slack and PV buses
};

/// Series branch between two internal bus indices. Parallel circuits are merged.
struct Line {
  int from = 0;
  int to = 0;
  std::complex<double> y;  // series admittance, p.u.
};

struct AdmittanceParts {
  Matrix G;
  Matrix B;
};

/// Immutable after construction; safe to share read-only across threads.
class Network {
 public:
  /// `buses[0]` must be the only slack bus. Throws InvalidDataError or
  /// ConnectivityError when an invariant fails.
  Network(std::string name, std::vector<Bus> buses, std::vector<Line> lines,
          double voltage_base = 1.0);

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] int num_buses() const noexcept { return static_cast<int>(buses_.size()); }
  [[nodiscard]] const std::vector<Bus>& buses() const noexcept { return buses_; }
  [[nodiscard]] const std::vector<Line>& lines() const noexcept { return lines_; }

  /// Slack magnitude of the source case; setpoints are stored relative to it.
  [[nodiscard]] double voltage_base() const noexcept { return voltage_base_; }

  [[nodiscard]] const Eigen::MatrixXcd& admittance() const noexcept { return Y_; }
  [[nodiscard]] const Matrix& conductance() const noexcept { return G_; }
  [[nodiscard]] const Matrix& susceptance() const noexcept { return B_; }

  [[nodiscard]] std::span<const int> nsb() const noexcept { return nsb_; }
  [[nodiscard]] std::span<const int> pv() const noexcept { return pv_; }
  [[nodiscard]] std::span<const int> pq() const noexcept { return pq_; }

  /// Number of unknowns k = |nsb| + |pq|.
  [[nodiscard]] int dim() const noexcept { return static_cast<int>(nsb_.size() + pq_.size()); }

  /// Position of theta_bus (resp. rho_bus) in the state vector, or -1 when fixed.
  [[nodiscard]] int theta_index(int bus) const { return theta_pos_.at(bus); }
  [[nodiscard]] int rho_index(int bus) const { return rho_pos_.at(bus); }

  /// Fixed log-magnitude of a slack or PV bus.
  [[nodiscard]] double fixed_rho(int bus) const;

  /// Neighbouring buses in line order.
  [[nodiscard]] const std::vector<int>& neighbours(int bus) const { return adjacency_.at(bus); }

  /// Hop distance from the slack bus to every bus.
  [[nodiscard]] std::vector<int> slack_distances() const;

 private:
  std::string name_;
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  double voltage_base_;
  Eigen::MatrixXcd Y_;
  Matrix G_;
  Matrix B_;
  std::vector<int> nsb_;
  std::vector<int> pv_;
  std::vector<int> pq_;
  std::vector<int> theta_pos_;
  std::vector<int> rho_pos_;
  std::vector<std::vector<int>> adjacency_;
};

/// Active (per non-slack bus) and reactive (per PQ bus) injections, p.u.
struct InjectionVector {
  Vector p;
  Vector q;

  [[nodiscard]] static InjectionVector zero(const Network& net);
  /// Stacked as (p_nsb, q_pq), the ordering of the power flow residual.
  [[nodiscard]] Vector stacked() const;
  [[nodiscard]] static InjectionVector from_stacked(const Network& net, const Vector& s);
};

/// Bus admittance matrix from series branch admittances only (no shunts, no taps).
/// Throws ConnectivityError if the lines do not connect every bus.
[[nodiscard]] AdmittanceParts build_admittance(const Network& net);
[[nodiscard]] Eigen::MatrixXcd stamp_admittance(int num_buses, std::span<const Line> lines);

/// Reads the bus/gen/branch/baseMVA tables of a MATPOWER case. Shunts, line
/// charging and transformer taps are ignored; each dropped quantity is
/// reported once through `warnings`.
[[nodiscard]] Network parse_matpower(std::string_view text, std::vector<std::string>* warnings = nullptr,
                                     std::string name = "case");

/// Canonical network JSON (format "monopf.network", version 1).
[[nodiscard]] std::string network_to_json(const Network& net, int indent = 2);
[[nodiscard]] Network network_from_json(std::string_view text);

/// 64-bit FNV-1a of the compact canonical JSON, as 16 hex digits.
[[nodiscard]] std::string network_fingerprint(const Network& net);

/// Loads `.m` (MATPOWER) or `.json` (canonical) by extension.
[[nodiscard]] Network load_network(const std::string& path, std::vector<std::string>* warnings = nullptr);

[[nodiscard]] std::string read_file(const std::string& path);
/// Writes via a temporary file and rename so readers never see a partial file.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace monopf
