#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dadpfl/model.hpp"
#include "dadpfl/sparse.hpp"

namespace dadpfl {

// Reference hardware: 80 TFLOPS / 450 W accelerator, 1 Gbit/s link, 1 W NIC,
// and a 5x correction from theoretical to measured compute time.
struct CostConstants {
  double flops_per_s = 80e12;
  double compute_power_w = 450.0;
  double bandwidth_bps = 1e9;
  double comm_power_w = 1.0;
  double correction = 5.0;

  void validate() const;
};

// 2 FLOPs per multiply-accumulate, backward twice the forward cost, sparse
// layers cost in proportion to their density.
double forward_flops(std::span<const LayerShape> shapes, std::span<const double> densities);
double training_flops(std::span<const LayerShape> shapes, std::span<const double> densities, double samples);

// Payload of one model upload: 4 bytes per active weight, a bitmap over
// maskable weights, and dense biases.
std::size_t comm_bytes(const MaskSet& mask, std::size_t bytes_per_weight = 4, bool with_biases = true);

struct EnergyTime {
  double t_comp = 0.0;  // s
  double t_comm = 0.0;  // s
  double c_comp = 0.0;  // J
  double c_comm = 0.0;  // J
};

EnergyTime energy_time(double flops, double bytes, const CostConstants& k);

// (1 - theta) * price_time * C_time + theta * price_energy * C_energy.
double total_cost(double c_time, double c_energy, double theta, double price_time = 1.0, double price_energy = 1.0);
std::vector<double> total_cost_curve(double c_time, double c_energy, std::span<const double> thetas,
                                     double price_time = 1.0, double price_energy = 1.0);

struct CostLedger {
  double cum_flops = 0.0;
  double cum_bytes = 0.0;
  double c_time = 0.0;    // s
  double c_energy = 0.0;  // J
  std::vector<double> client_flops;
  std::vector<double> client_bytes;
  std::vector<double> busiest_bytes_per_round;

  explicit CostLedger(std::size_t clients = 0) : client_flops(clients, 0.0), client_bytes(clients, 0.0) {}

  // Adds one round. Time is the round makespan plus the slowest upload;
  // energy sums compute and communication over every client.
  void add_round(std::span<const double> flops, std::span<const double> bytes, double makespan_s,
                 const CostConstants& k);
};

}  // namespace dadpfl
