#pragma once

// Simplified Isolation Kernel: hypersphere partitionings, SIK / IK feature
// maps, kernels and anomaly scores, IDK baseline, and evaluation helpers.

#include "sik/batch_locate.hpp"
#include "sik/dataset.hpp"
#include "sik/embedding_matrix.hpp"
#include "sik/errors.hpp"
#include "sik/eval.hpp"
#include "sik/features.hpp"
#include "sik/io.hpp"
#include "sik/parallel.hpp"
#include "sik/partitioning.hpp"
#include "sik/report_io.hpp"
#include "sik/rng.hpp"
#include "sik/scoring.hpp"
