#pragma once

#include "fairdyn/analysis.hpp"
#include "fairdyn/distributions.hpp"
#include "fairdyn/dynamics.hpp"
#include "fairdyn/error.hpp"
#include "fairdyn/io.hpp"
#include "fairdyn/matrix2.hpp"
#include "fairdyn/montecarlo.hpp"
#include "fairdyn/normal.hpp"
#include "fairdyn/parallel.hpp"
#include "fairdyn/root_finding.hpp"
#include "fairdyn/scenario.hpp"
#include "fairdyn/threshold.hpp"
