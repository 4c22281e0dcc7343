#pragma once

#include "amfshrink/config.hpp"
#include "amfshrink/detector.hpp"
#include "amfshrink/estimators.hpp"
#include "amfshrink/experiment.hpp"
#include "amfshrink/linalg.hpp"
#include "amfshrink/matrix_io.hpp"
#include "amfshrink/population.hpp"
#include "amfshrink/sampling.hpp"
#include "amfshrink/special.hpp"
