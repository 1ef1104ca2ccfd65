#include "monopf/grid.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

#include "monopf/errors.hpp"

namespace monopf {

const char* to_string(BusType type) noexcept {
  switch (type) {
    case BusType::slack: return "slack";
    case BusType::pv: return "pv";
    case BusType::pq: return "pq";
  }
  return "unknown";
}

BusType bus_type_from_string(std::string_view name) {
  if (name == "slack") return BusType::slack;
  if (name == "pv") return BusType::pv;
  if (name == "pq") return BusType::pq;
  throw InvalidDataError("unknown bus type '" + std::string(name) + "'");
}

namespace {

// Connectivity of the off-diagonal sparsity pattern of Y.
void require_connected(const Eigen::MatrixXcd& Y) {
  const auto n = Y.rows();
  std::vector<bool> seen(n, false);
  std::queue<Eigen::Index> frontier;
  frontier.push(0);
  seen[0] = true;
  Eigen::Index count = 1;
  while (!frontier.empty()) {
    const auto i = frontier.front();
    frontier.pop();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!seen[j] && j != i && Y(i, j) != std::complex<double>(0.0, 0.0)) {
        seen[j] = true;
        ++count;
        frontier.push(j);
      }
    }
  }
  if (count != n) {
    throw ConnectivityError("network is not connected: " + std::to_string(n - count) +
                            " bus(es) unreachable from the slack bus");
  }
}

}  // namespace

Eigen::MatrixXcd stamp_admittance(int num_buses, std::span<const Line> lines) {
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(num_buses, num_buses);
  for (const auto& line : lines) {
    Y(line.from, line.from) += line.y;
    Y(line.to, line.to) += line.y;
    Y(line.from, line.to) -= line.y;
    Y(line.to, line.from) -= line.y;
  }
  return Y;
}

Network::Network(std::string name, std::vector<Bus> buses, std::vector<Line> lines,
                 double voltage_base)
    : name_(std::move(name)), buses_(std::move(buses)), voltage_base_(voltage_base) {
  const int n = num_buses();
  if (n < 2) throw InvalidDataError("a network needs at least two buses");
  if (buses_[0].type != BusType::slack) throw InvalidDataError("bus 0 must be the slack bus");
  for (int i = 1; i < n; ++i) {
    if (buses_[i].type == BusType::slack) {
      throw InvalidDataError("multiple slack buses (bus ids " + std::to_string(buses_[0].id) +
                             " and " + std::to_string(buses_[i].id) + ")");
    }
  }
  if (std::abs(buses_[0].v_set - 1.0) > 1e-12) {
    throw InvalidDataError("slack magnitude must be 1 p.u. after normalization");
  }
  for (const auto& bus : buses_) {
    if (bus.type != BusType::pq && !(bus.v_set > 0.0 && std::isfinite(bus.v_set))) {
      throw InvalidDataError("bus " + std::to_string(bus.id) + " has a non-positive voltage setpoint");
    }
  }

  // Merge parallel circuits, keeping the first stored orientation.
  std::map<std::pair<int, int>, std::size_t> slot;
  for (const auto& line : lines) {
    if (line.from < 0 || line.to < 0 || line.from >= n || line.to >= n) {
      throw InvalidDataError("line endpoint out of range");
    }
    if (line.from == line.to) throw InvalidDataError("self-loop line at bus index " + std::to_string(line.from));
    if (!std::isfinite(line.y.real()) || !std::isfinite(line.y.imag()) || std::abs(line.y) == 0.0) {
      throw InvalidDataError("line " + std::to_string(buses_[line.from].id) + "-" +
                             std::to_string(buses_[line.to].id) + " has invalid admittance");
    }
    const auto key = std::minmax(line.from, line.to);
    if (auto it = slot.find(key); it != slot.end()) {
      lines_[it->second].y += line.y;
    } else {
      slot.emplace(key, lines_.size());
      lines_.push_back(line);
    }
  }

  Y_ = stamp_admittance(n, lines_);
  require_connected(Y_);
  G_ = Y_.real();
  B_ = Y_.imag();

  theta_pos_.assign(n, -1);
  rho_pos_.assign(n, -1);
  adjacency_.assign(n, {});
  for (int i = 1; i < n; ++i) {
    nsb_.push_back(i);
    (buses_[i].type == BusType::pv ? pv_ : pq_).push_back(i);
  }
  for (std::size_t a = 0; a < nsb_.size(); ++a) theta_pos_[nsb_[a]] = static_cast<int>(a);
  for (std::size_t a = 0; a < pq_.size(); ++a) rho_pos_[pq_[a]] = static_cast<int>(nsb_.size() + a);
  for (const auto& line : lines_) {
    adjacency_[line.from].push_back(line.to);
    adjacency_[line.to].push_back(line.from);
  }
}

double Network::fixed_rho(int bus) const {
  const auto& b = buses_.at(bus);
  if (b.type == BusType::pq) throw ContractViolation("PQ bus magnitude is not fixed");
  return std::log(b.v_set);
}

std::vector<int> Network::slack_distances() const {
  std::vector<int> dist(buses_.size(), -1);
  std::queue<int> frontier;
  dist[0] = 0;
  frontier.push(0);
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j : adjacency_[i]) {
      if (dist[j] < 0) {
        dist[j] = dist[i] + 1;
        frontier.push(j);
      }
    }
  }
  return dist;
}

AdmittanceParts build_admittance(const Network& net) {
  Eigen::MatrixXcd Y = stamp_admittance(net.num_buses(), net.lines());
  require_connected(Y);
  return {Y.real(), Y.imag()};
}

InjectionVector InjectionVector::zero(const Network& net) {
  return {Vector::Zero(static_cast<Eigen::Index>(net.nsb().size())),
          Vector::Zero(static_cast<Eigen::Index>(net.pq().size()))};
}

Vector InjectionVector::stacked() const {
  Vector s(p.size() + q.size());
  s << p, q;
  return s;
}

InjectionVector InjectionVector::from_stacked(const Network& net, const Vector& s) {
  const auto np = static_cast<Eigen::Index>(net.nsb().size());
  const auto nq = static_cast<Eigen::Index>(net.pq().size());
  if (s.size() != np + nq) throw ContractViolation("injection vector has wrong length");
  return {s.head(np), s.tail(nq)};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("short write to '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

Network load_network(const std::string& path, std::vector<std::string>* warnings) {
  const std::string text = read_file(path);
  const std::filesystem::path p(path);
  if (p.extension() == ".m") return parse_matpower(text, warnings, p.stem().string());
  return network_from_json(text);
}

}  // namespace monopf
