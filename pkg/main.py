#!/usr/bin/env python
import sys
import multiprocessing


if __name__=="__main__":
    # trial pools use the spawn start method
    multiprocessing.freeze_support()

    import subsketch.harness.cli
    sys.exit(subsketch.harness.cli.main())
