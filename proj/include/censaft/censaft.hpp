#pragma once

#include "censaft/buckley_james.hpp"
#include "censaft/data.hpp"
#include "censaft/errors.hpp"
#include "censaft/impute.hpp"
#include "censaft/io.hpp"
#include "censaft/km.hpp"
#include "censaft/linalg.hpp"
#include "censaft/qp.hpp"
#include "censaft/rng.hpp"
#include "censaft/simulate.hpp"
#include "censaft/swls.hpp"
