#pragma once

#include "spdc/materials.hpp"
#include "spdc/phasematch.hpp"

namespace spdc::test {

inline const MaterialLibrary& library() {
  static const MaterialLibrary lib = MaterialLibrary::load(SPDC_DATA_DIR "/materials.json");
  return lib;
}

inline const optics::Material& bbo() { return library().get("BBO"); }
inline const optics::Material& yvo4() { return library().get("YVO4"); }

inline phasematch::PhaseMatchConfig reference_crystal(double pump_fwhm_nm = 0.5) {
  return {bbo(), 29.0, 15.76, 403.0, pump_fwhm_nm};
}

}  // namespace spdc::test
