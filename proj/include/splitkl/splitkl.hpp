#pragma once

#include "splitkl/bound_report.hpp"
#include "splitkl/concentration.hpp"
#include "splitkl/ensemble.hpp"
#include "splitkl/io.hpp"
#include "splitkl/kl.hpp"
#include "splitkl/majority_vote.hpp"
#include "splitkl/optim.hpp"
#include "splitkl/pac_bayes.hpp"
#include "splitkl/parallel.hpp"
#include "splitkl/rng.hpp"
#include "splitkl/simulation.hpp"
#include "splitkl/tandem.hpp"
