#ifndef FRACDDG_FRACDDG_HPP_
#define FRACDDG_FRACDDG_HPP_

#include "fracddg/ddg.hpp"
#include "fracddg/errors.hpp"
#include "fracddg/frac_ops.hpp"
#include "fracddg/harness.hpp"
#include "fracddg/mesh_basis.hpp"
#include "fracddg/models.hpp"
#include "fracddg/specfun.hpp"
#include "fracddg/timestep.hpp"

#endif  // FRACDDG_FRACDDG_HPP_
