from frm_cli.main import main

raise SystemExit(main())
