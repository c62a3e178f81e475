#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
import sys

from pdnet.cli import main

sys.exit(main())
