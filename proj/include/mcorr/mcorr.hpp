#pragma once

#include "mcorr/core_stats.hpp"
#include "mcorr/datagen.hpp"
#include "mcorr/dataset.hpp"
#include "mcorr/elastic_manifold.hpp"
#include "mcorr/errors.hpp"
#include "mcorr/json_io.hpp"
#include "mcorr/linear_model.hpp"
#include "mcorr/pca_manifold.hpp"
#include "mcorr/rp_correlation.hpp"
#include "mcorr/svg.hpp"
