#pragma once

#include "rspca/config.hpp"
#include "rspca/ensemble.hpp"
#include "rspca/errors.hpp"
#include "rspca/experiments.hpp"
#include "rspca/mp.hpp"
#include "rspca/parallel.hpp"
#include "rspca/plot.hpp"
#include "rspca/quadrature.hpp"
#include "rspca/resolvent.hpp"
#include "rspca/rng.hpp"
#include "rspca/run.hpp"
#include "rspca/spectral.hpp"
#include "rspca/stats.hpp"
#include "rspca/table.hpp"
