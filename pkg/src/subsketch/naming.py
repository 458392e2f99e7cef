records_file        = 'records.csv'
summary_file        = 'summary.json'
summary_suffix      = '.summary.json'
certificate_file    = 'certificates.json'
config_file         = 'experiment.json'
instance_prefix     = 'instance_'
instance_suffix     = '.txt'
