#pragma once

#include "nhl/bandtheory.hpp"
#include "nhl/csv.hpp"
#include "nhl/effective.hpp"
#include "nhl/eigensolver.hpp"
#include "nhl/lattice.hpp"
#include "nhl/model_json.hpp"
#include "nhl/models.hpp"
#include "nhl/nonbloch.hpp"
#include "nhl/scan.hpp"
#include "nhl/spectral_analysis.hpp"
