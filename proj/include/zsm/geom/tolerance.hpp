#pragma once

namespace zsm::geom
{

// Scene coordinates span ~1e3 m; double precision leaves plenty of headroom.
inline constexpr double eps_geom = 1e-9; // m, vertex dedup and orientation
inline constexpr double eps_lp = 1e-8;   // LP feasibility slack (row-normalized units)
inline constexpr double eps_area = 1e-6; // m^2, smallest representable region

} // namespace zsm::geom
