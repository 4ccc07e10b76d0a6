#pragma once

#include "seqcd/error.hpp"
#include "seqcd/random.hpp"
#include "seqcd/parallel.hpp"
#include "seqcd/graph.hpp"
#include "seqcd/spectral.hpp"
#include "seqcd/sbm.hpp"
#include "seqcd/detect.hpp"
#include "seqcd/alpha_select.hpp"
#include "seqcd/io.hpp"
#include "seqcd/report.hpp"
