#ifndef KERRSEL_IO_HPP
#define KERRSEL_IO_HPP

#include <iosfwd>
#include <string>

#include "kerrsel/evolve.hpp"
#include "kerrsel/magnus.hpp"
#include "kerrsel/protocols.hpp"
#include "kerrsel/spectrum.hpp"

// File formats. Every CSV starts with a versioned schema comment line; all
// numbers are written with enough digits to round-trip, so identical inputs
// give byte-identical files. Frequencies cross this boundary in MHz.

namespace kerrsel::io {

std::string format_double(double v);

/// "# kerrsel-csv v1 dynamics" + time_us, pop_<n1>_<n2>..., fidelity, extras.
void write_dynamics_csv(std::ostream& os, const SimResult& result);

/// "# kerrsel-csv v1 spectrum-map" + n_prime, m_prime, delta_rel_MHz,
/// rabi_MHz, ratio.
void write_degeneracy_csv(std::ostream& os, const DegeneracyMap& map);

/// "# kerrsel-csv v1 wigner" + re_alpha, im_alpha, w.
void write_wigner_csv(std::ostream& os, const WignerGrid& grid);

/// Protocol documents round-trip through JSON so custom sequences can be
/// authored by hand; "auto" stands for an unresolved frequency or duration.
std::string protocol_to_json(const ProtocolSpec& spec, int indent = 2);
ProtocolSpec protocol_from_json(const std::string& text);

std::string budget_to_json(const std::vector<BudgetEntry>& budget, int indent = 2);
std::string effective_report_to_json(const EffectiveReport& report, int indent = 2);

std::string selectivity_summary_json(const SystemParams& params, const DegeneracyMap& map,
                                     const SelectivityReport& margin,
                                     const std::vector<RationalWitness>& witnesses,
                                     int indent = 2);

}  // namespace kerrsel::io

#endif
