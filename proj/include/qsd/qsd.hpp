#pragma once

#include "qsd/core.hpp"
#include "qsd/discrimination.hpp"
#include "qsd/ensembles.hpp"
#include "qsd/experiment.hpp"
#include "qsd/io.hpp"
#include "qsd/network.hpp"
#include "qsd/optimizer.hpp"
#include "qsd/parallel.hpp"
#include "qsd/rng.hpp"
#include "qsd/simplex.hpp"
#include "qsd/version.hpp"
#include "qsd/waveplates.hpp"
