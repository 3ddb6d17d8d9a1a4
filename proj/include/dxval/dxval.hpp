#pragma once

#include "dxval/error.hpp"
#include "dxval/io.hpp"
#include "dxval/metrics.hpp"
#include "dxval/roc.hpp"
#include "dxval/agreement.hpp"
#include "dxval/study_design.hpp"
#include "dxval/governance.hpp"
#include "dxval/reporting.hpp"
