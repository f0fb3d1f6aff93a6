#ifndef BMMIX_BMMIX_HPP
#define BMMIX_BMMIX_HPP

#include "bmmix/bma.hpp"
#include "bmmix/common.hpp"
#include "bmmix/csv.hpp"
#include "bmmix/dataset.hpp"
#include "bmmix/distributions.hpp"
#include "bmmix/gp.hpp"
#include "bmmix/kernels.hpp"
#include "bmmix/location.hpp"
#include "bmmix/mixtures/build.hpp"
#include "bmmix/mixtures/gbmm_d.hpp"
#include "bmmix/mixtures/gbmm_l.hpp"
#include "bmmix/mixtures/lbmm_gld.hpp"
#include "bmmix/mixtures/lbmm_gpd.hpp"
#include "bmmix/mixtures/prior_config.hpp"
#include "bmmix/model_spec.hpp"
#include "bmmix/packing.hpp"
#include "bmmix/predict.hpp"
#include "bmmix/rng.hpp"
#include "bmmix/run_io.hpp"
#include "bmmix/samplers/diagnostics.hpp"
#include "bmmix/samplers/mh.hpp"
#include "bmmix/samplers/nuts.hpp"
#include "bmmix/samplers/posterior_samples.hpp"
#include "bmmix/samplers/sampler_config.hpp"
#include "bmmix/simplex.hpp"
#include "bmmix/version.hpp"

#endif  // BMMIX_BMMIX_HPP
