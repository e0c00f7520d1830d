#pragma once

// Umbrella header: mixture-model clustering for mixed numeric/categorical
// data with missing values, plus model selection, feature ranking and
// distance-network export.

#include "mixclust/common.hpp"
#include "mixclust/csv.hpp"
#include "mixclust/dataset.hpp"
#include "mixclust/em.hpp"
#include "mixclust/metrics.hpp"
#include "mixclust/model.hpp"
#include "mixclust/network.hpp"
#include "mixclust/parallel.hpp"
#include "mixclust/ranking.hpp"
#include "mixclust/rng.hpp"
#include "mixclust/selection.hpp"
#include "mixclust/synth.hpp"
