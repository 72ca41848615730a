#pragma once

// Differentially private estimation of the Ising inverse-temperature
// parameter from a single network realization: graph builders, exact and
// Glauber samplers, the pseudo-likelihood estimator and its private
// objective-perturbation variant, privacy-bound audits, and the experiment
// harness.

#include "prising/coupling.hpp"
#include "prising/estimator.hpp"
#include "prising/experiment.hpp"
#include "prising/graph.hpp"
#include "prising/ising.hpp"
#include "prising/privacy_audit.hpp"
#include "prising/rng.hpp"
