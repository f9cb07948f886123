// Two carriers, two memories: the output state at a few carrier bases and its
// one-way and global discord.
#include <cstdio>
#include <numbers>

#include "discordnet/correlations.hpp"
#include "discordnet/protocol.hpp"

int main() {
  using namespace discordnet;
  constexpr double pi = std::numbers::pi;
  const BlochAngles bases[][2] = {
      {{0.0, 0.0}, {1.0, 0.0}},            // computational carrier: nothing happens
      {{pi / 2, 0.0}, {pi / 4, 0.0}},      // largest one-way discord
      {{0.9458, 0.0}, {0.9458, 0.0}},      // largest GQD
      {{0.9458, 1.3}, {0.9458, 4.1}},      // same thetas, other phases
  };
  std::printf("%8s %8s %8s %8s | %9s %9s %9s\n", "theta1", "phi1", "theta2", "phi2", "D(M1|M2)", "D(M2|M1)", "GQD");
  for (const auto& b : bases) {
    const auto out = run_circuit(standard_config(2, {b[0], b[1]}));
    const auto& rho = out.final_state;
    std::printf("%8.4f %8.4f %8.4f %8.4f | %9.5f %9.5f %9.5f\n", b[0].theta, b[0].phi, b[1].theta, b[1].phi,
                discord_asym(rho, "M2", {"M1"}).value, discord_asym(rho, "M1", {"M2"}).value, gqd_min(rho).value);
  }
}
