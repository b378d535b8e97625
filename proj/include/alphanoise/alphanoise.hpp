#pragma once

#include "alphanoise/augment.hpp"
#include "alphanoise/dataset.hpp"
#include "alphanoise/dataset_io.hpp"
#include "alphanoise/errors.hpp"
#include "alphanoise/harness.hpp"
#include "alphanoise/idx.hpp"
#include "alphanoise/model_io.hpp"
#include "alphanoise/nn.hpp"
#include "alphanoise/npy.hpp"
#include "alphanoise/plan.hpp"
#include "alphanoise/quadrature.hpp"
#include "alphanoise/report.hpp"
#include "alphanoise/rng.hpp"
#include "alphanoise/sample_io.hpp"
#include "alphanoise/series_csv.hpp"
#include "alphanoise/stable.hpp"
#include "alphanoise/stats.hpp"
