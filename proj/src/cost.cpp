#include "dadpfl/cost.hpp"

#include <algorithm>

#include "dadpfl/errors.hpp"

namespace dadpfl {

void CostConstants::validate() const {
  if (!(flops_per_s > 0.0) || !(compute_power_w > 0.0) || !(bandwidth_bps > 0.0) || !(comm_power_w > 0.0) ||
      !(correction > 0.0))
    throw InvalidParameter("cost constants must be strictly positive");
}

double forward_flops(std::span<const LayerShape> shapes, std::span<const double> densities) {
  if (densities.size() != shapes.size()) throw InvalidParameter("flops: one density per layer required");
  double f = 0.0;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    if (densities[l] < 0.0 || densities[l] > 1.0) throw InvalidParameter("flops: density outside [0, 1]");
    f += 2.0 * densities[l] * double(shapes[l].n_in) * double(shapes[l].n_out);
  }
  return f;
}

double training_flops(std::span<const LayerShape> shapes, std::span<const double> densities, double samples) {
  return 3.0 * forward_flops(shapes, densities) * samples;
}

std::size_t comm_bytes(const MaskSet& mask, std::size_t bytes_per_weight, bool with_biases) {
  std::size_t bias = 0;
  if (with_biases)
    for (const auto& s : mask.shapes()) bias += s.n_out;
  return mask.active() * bytes_per_weight + (mask.maskable() + 7) / 8 + bias * bytes_per_weight;
}

EnergyTime energy_time(double flops, double bytes, const CostConstants& k) {
  EnergyTime e;
  e.t_comp = k.correction * flops / k.flops_per_s;
  e.c_comp = e.t_comp * k.compute_power_w;
  e.t_comm = 8.0 * bytes / k.bandwidth_bps;
  e.c_comm = e.t_comm * k.comm_power_w;
  return e;
}

double total_cost(double c_time, double c_energy, double theta, double price_time, double price_energy) {
  if (theta < 0.0 || theta > 1.0) throw InvalidParameter("theta must lie in [0, 1]");
  return (1.0 - theta) * price_time * c_time + theta * price_energy * c_energy;
}

std::vector<double> total_cost_curve(double c_time, double c_energy, std::span<const double> thetas,
                                     double price_time, double price_energy) {
  std::vector<double> out;
  out.reserve(thetas.size());
  for (double th : thetas) out.push_back(total_cost(c_time, c_energy, th, price_time, price_energy));
  return out;
}

void CostLedger::add_round(std::span<const double> flops, std::span<const double> bytes, double makespan_s,
                           const CostConstants& k) {
  if (flops.size() != bytes.size()) throw InvalidParameter("ledger: flops and bytes must cover the same clients");
  if (client_flops.size() < flops.size()) {
    client_flops.resize(flops.size(), 0.0);
    client_bytes.resize(flops.size(), 0.0);
  }
  double max_comm = 0.0, busiest = 0.0;
  for (std::size_t i = 0; i < flops.size(); ++i) {
    const EnergyTime e = energy_time(flops[i], bytes[i], k);
    c_energy += e.c_comp + e.c_comm;
    max_comm = std::max(max_comm, e.t_comm);
    busiest = std::max(busiest, bytes[i]);
    cum_flops += flops[i];
    cum_bytes += bytes[i];
    client_flops[i] += flops[i];
    client_bytes[i] += bytes[i];
  }
  c_time += makespan_s + max_comm;
  busiest_bytes_per_round.push_back(busiest);
}

}  // namespace dadpfl
