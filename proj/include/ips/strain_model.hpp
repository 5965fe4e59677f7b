#pragma once

// Mechanical and photoelastic relations: tensile load -> strain,
// strain x gauge length -> optical phase change, and the critical-phase
// feasibility check for a modulation scheme.

#include <stdexcept>

namespace ips::strain {

// Cross-section and stiffness of the bare fiber.
struct FiberGeometry {
  double bare_diameter_um = 250.0;
  double youngs_modulus_pa = 7.0e10;  // conventional value for silica glass

  void validate() const;
};

// Dimensionless strain. 1e-6 = 1 microstrain, 1e-9 = 1 nanostrain.
// Magnitudes of 1e-2 and beyond would break the fiber and are rejected.
struct Strain {
  double value = 0.0;
};

inline constexpr double kMaxStrain = 1e-2;

// Photoelastic constant K in nanostrain-meters per radian. The default 100
// reproduces: 100 nanostrain over 100 m -> 100 rad of phase change.
struct PhotoelasticConstant {
  double nstrain_m_per_rad = 100.0;
};

enum class Modulation { qpsk };

// Minimum phase change that produces a statistically measurable error-rate
// change for QPSK.
inline constexpr double kCriticalPhaseQpskRad = 0.7853981633974483;  // pi/4

inline constexpr double kStandardGravity = 9.81;  // m/s^2

// Strain of a fiber under a hanging mass: (F/A)/E with F = m*g and
// A the bare-fiber cross section.
Strain strain_from_load(double mass_g, const FiberGeometry& geom, double gravity = kStandardGravity);

// Phase change accumulated over a gauge length: strain * length / K.
double phase_change_rad(Strain strain, double gauge_length_m, PhotoelasticConstant k = {});

// Inverse of phase_change_rad: strain recovered from an observed phase change.
Strain strain_from_phase(double delta_phi_rad, double gauge_length_m, PhotoelasticConstant k = {});

// True iff |delta_phi| reaches the modulation's critical phase change.
bool exceeds_critical_phase(double delta_phi_rad, Modulation modulation);

}  // namespace ips::strain
