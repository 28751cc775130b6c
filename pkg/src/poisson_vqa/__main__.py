import sys

from poisson_vqa.cli import main

sys.exit(main())
