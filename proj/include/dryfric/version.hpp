#pragma once

namespace dryfric {

inline constexpr const char* version = "0.1.0";

// Revision of docs/formulas.md. Bump whenever a formula there changes;
// run manifests embed it so outputs are traceable to the exact math used.
inline constexpr const char* formula_ledger_revision = "formulas-r1";

}
