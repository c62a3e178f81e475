#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
