import sys

from attitude_vi.cli import main

sys.exit(main())
