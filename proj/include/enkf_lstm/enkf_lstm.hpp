#pragma once

#include "enkf_lstm/bayes_lstm.hpp"
#include "enkf_lstm/chi_squared.hpp"
#include "enkf_lstm/config.hpp"
#include "enkf_lstm/dataset.hpp"
#include "enkf_lstm/embedding.hpp"
#include "enkf_lstm/enkf.hpp"
#include "enkf_lstm/errors.hpp"
#include "enkf_lstm/lstm.hpp"
#include "enkf_lstm/outlier.hpp"
#include "enkf_lstm/ppca.hpp"
#include "enkf_lstm/rng.hpp"
